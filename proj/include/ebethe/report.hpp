#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ebethe/bethe.hpp"
#include "ebethe/elliptic.hpp"
#include "ebethe/wronski.hpp"

namespace ebethe {

inline constexpr const char* kReportSchema = "elliptic-bethe/1";

// Every threshold the commands use, by name. All of them are echoed in reports.
class Tolerances {
 public:
  Tolerances();

  double operator[](const std::string& key) const;
  // throws ConfigError on unknown keys and on values that are not positive finite numbers
  void override_with(const nlohmann::json& j);
  const std::map<std::string, double>& values() const { return values_; }

  BetheOptions bethe() const;
  FiberOptions fiber() const;

 private:
  std::map<std::string, double> values_;
};

struct ExperimentConfig {
  cplx tau{0.0, 1.0};
  cplx base{-0.05, -0.05};
  int m = 2;
  std::vector<cplx> z = {0.13, cplx(0.41, 0.12), cplx(0.55, 0.31), cplx(0.77, 0.05)};
  cplx mu{0.0, 6.0};
  std::vector<cplx> mu_grid;             // sorted by |Im mu| descending
  std::optional<std::vector<Subset>> subsets;  // 0-based; nullopt means all m-subsets
  Tolerances tol;
  std::uint64_t seed = 1;

  // Keys: tau, parallelogram_base, m, z, mu, mu_grid, subsets ("all" or 1-based lists), tolerances, seed.
  // Complex numbers are [re, im] or plain reals. Missing keys keep the defaults above.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  nlohmann::json to_json() const;

  // throws ConfigError naming the violated invariant
  void validate() const;
  Torus torus() const { return Torus(tau); }
  BetheProblem problem() const { return BetheProblem(m, z, mu, torus(), base); }
  std::vector<Subset> subset_list() const;
};

// "6i", "-2.5", "0.3+6i", "1e1i"; throws ConfigError
cplx parse_complex(const std::string& s);
// comma separated parse_complex entries
std::vector<cplx> parse_mu_grid(const std::string& s);

struct Check {
  enum class Relation { below, above, equal };
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::below;
  bool pass = false;

  static Check below(std::string name, double measured, double tol);
  static Check above(std::string name, double measured, double tol);
  static Check equal(std::string name, double measured, double expected);
};

struct RunReport {
  std::string command;
  ExperimentConfig config;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  nlohmann::json results = nlohmann::json::object();
  std::string csv;  // plot-ready table, header line first
  std::vector<std::pair<std::string, double>> timings;  // seconds

  bool passed() const;
  // 0 ran, 1 a check failed (or, with strict, a warning was raised)
  int exit_code(bool strict) const;
  // timings are left out unless asked for, so that reports are byte-identical across runs
  nlohmann::json to_json(bool with_timings = false) const;
  std::string to_text(bool with_timings = false) const;
};

nlohmann::json to_json(cplx c);
nlohmann::json to_json(const std::vector<cplx>& v);
// 1-based, as in configs
nlohmann::json subset_json(const Subset& I);

// Special-function identity matrix at `samples` random points of the cell.
std::vector<Check> identity_checks(const Torus& ctx, std::uint64_t seed, int samples, const Tolerances& tol);

// lambda sample points: low-discrepancy in the cell, outside the eps-neighbourhood of the lattice
std::vector<cplx> lambda_samples(const Torus& ctx, cplx base, std::uint64_t seed, int count, double eps);

RunReport cmd_identities(const ExperimentConfig& c);
RunReport cmd_solve(const ExperimentConfig& c);
RunReport cmd_fiber(const ExperimentConfig& c);
RunReport cmd_eigen(const ExperimentConfig& c);

}  // namespace ebethe
