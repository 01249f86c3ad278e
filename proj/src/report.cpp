#include "ebethe/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "ebethe/errors.hpp"
#include "ebethe/repspace.hpp"
#include "ebethe/thetapoly.hpp"

namespace ebethe {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kIdentitySamples = 50;
constexpr int kLambdaSamples = 10;
constexpr int kSeparationSamples = 5;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string subset_label(const Subset& I) {
  std::ostringstream os;
  os << '[';
  for (size_t j = 0; j < I.size(); ++j) os << (j ? "," : "") << I[j] + 1;
  os << ']';
  return os.str();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

cplx complex_from(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  if (j.is_string()) return parse_complex(j.get<std::string>());
  throw ConfigError(what + ": expected a number, [re, im] or a string such as \"0.3+6i\"");
}

std::vector<cplx> complex_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected a list");
  std::vector<cplx> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(complex_from(j[i], what + "[" + std::to_string(i) + "]"));
  return out;
}

double rel(cplx got, cplx expect) { return std::abs(got - expect) / std::max(1.0, std::abs(expect)); }

cplx random_point(std::mt19937_64& rng, const Torus& ctx, double margin = 0.05) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const cplx x = u(rng) + u(rng) * ctx.tau();
    if (ctx.lattice_distance(x) > margin) return x;
  }
}

cplx circle_mean(const std::function<cplx(cplx)>& f, cplx c, double r = 1e-2, int n = 32) {
  cplx s = 0.0;
  for (int k = 0; k < n; ++k) s += f(c + r * std::exp(k2PiI * (k + 0.5) / static_cast<double>(n)));
  return s / static_cast<double>(n);
}

// r2 points at least eps away from every listed point modulo the lattice
std::vector<cplx> x_samples(const Torus& ctx, cplx base, double shift, int count, const std::vector<cplx>& avoid,
                            double eps) {
  std::vector<cplx> out;
  for (int i = 0; static_cast<int>(out.size()) < count; ++i) {
    const cplx x = r2_point(i, base, ctx.tau(), shift);
    const bool clear = std::all_of(avoid.begin(), avoid.end(), [&](cplx a) { return ctx.distance_mod(x, a) > eps; });
    if (clear) out.push_back(x);
  }
  return out;
}

double unit_shift(std::uint64_t seed, std::uint64_t stream) {
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

json solution_json(const BetheSolution& s) {
  json j;
  j["mu"] = to_json(s.mu);
  j["t"] = to_json(s.t);
  j["residual"] = s.residual;
  j["status"] = to_string(s.status);
  j["subset_tag"] = s.subset_tag ? subset_json(*s.subset_tag) : json(nullptr);
  return j;
}

void add_checks_csv(RunReport& r) {
  std::ostringstream os;
  os << "name,pass,measured,tolerance\n";
  for (const auto& c : r.checks)
    os << c.name << ',' << (c.pass ? 1 : 0) << ',' << std::setprecision(17) << c.measured << ',' << c.tolerance
       << '\n';
  r.csv = os.str();
}

RunReport start(const char* command, const ExperimentConfig& c) {
  RunReport r;
  r.command = command;
  r.config = c;
  return r;
}

}  // namespace

// ---------------------------------------------------------------- tolerances

Tolerances::Tolerances()
    : values_{
          {"theta_prime", 1e-12},      {"heat", 1e-7},          {"heat_step", 1e-5},
          {"identity", 1e-10},         {"newton", 1e-12},       {"bae_residual", 1e-10},
          {"residue", 1e-9},           {"involution", 1e-8},    {"coalesce", 1e-8},
          {"wronskian", 1e-9},         {"dedup", 1e-6},         {"separation", 1e-6},
          {"jacobian_condition", 1e6}, {"distinct", 1e-4},      {"eigen", 1e-8},
          {"kzb_sum", 1e-9},           {"s2", 1e-8},            {"periodic", 1e-9},
          {"kernel", 1e-8},            {"weyl", 1e-8},          {"partner_match", 1e-8},
          {"separation_gap", 1e-3},    {"lambda_exclusion", 0.05},
      } {}

double Tolerances::operator[](const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("unknown tolerance " + key);
  return it->second;
}

void Tolerances::override_with(const json& j) {
  if (!j.is_object()) throw ConfigError("tolerances: expected an object of name: value");
  for (const auto& [k, v] : j.items()) {
    if (!values_.count(k)) throw ConfigError("tolerances: unknown tolerance \"" + k + "\"");
    if (!v.is_number() || !std::isfinite(v.get<double>()) || v.get<double>() <= 0.0)
      throw ConfigError("tolerances." + k + ": must be a positive finite number");
    values_[k] = v.get<double>();
  }
}

BetheOptions Tolerances::bethe() const {
  BetheOptions o;
  o.residual_tol = std::min((*this)["newton"], (*this)["bae_residual"]);
  o.accept_tol = (*this)["bae_residual"];
  o.involution_tol = (*this)["involution"];
  o.coalesce_tol = (*this)["coalesce"];
  return o;
}

FiberOptions Tolerances::fiber() const {
  FiberOptions o;
  o.bethe = bethe();
  o.dedup_tol = (*this)["dedup"];
  o.wr_tol = (*this)["wronskian"];
  o.separation_tol = (*this)["separation"];
  o.jacobian_cond_max = (*this)["jacobian_condition"];
  return o;
}

// ---------------------------------------------------------------- config

cplx parse_complex(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  static const std::string num = R"((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)";
  static const std::regex re_real("^([+-]?" + num + ")$");
  static const std::regex re_imag("^([+-]?)(" + num + ")?i$");
  static const std::regex re_full("^([+-]?" + num + ")([+-])(" + num + ")?i$");
  std::smatch m;
  if (std::regex_match(s, m, re_real)) return std::stod(m[1]);
  if (std::regex_match(s, m, re_imag)) {
    const double v = m[2].matched ? std::stod(m[2]) : 1.0;
    return {0.0, m[1] == "-" ? -v : v};
  }
  if (std::regex_match(s, m, re_full)) {
    const double v = m[3].matched ? std::stod(m[3]) : 1.0;
    return {std::stod(m[1]), m[2] == "-" ? -v : v};
  }
  throw ConfigError("cannot read \"" + text + "\" as a complex number (expected forms: 2, 6i, 0.3+6i)");
}

std::vector<cplx> parse_mu_grid(const std::string& s) {
  std::vector<cplx> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_complex(item));
  if (out.empty()) throw ConfigError("mu_grid: empty list");
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::set<std::string> known = {"tau", "parallelogram_base", "m", "z", "mu",
                                              "mu_grid", "subsets", "tolerances", "seed"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("config: unknown key \"" + k + "\"");

  ExperimentConfig c;
  if (j.contains("tau")) c.tau = complex_from(j["tau"], "tau");
  if (j.contains("parallelogram_base")) c.base = complex_from(j["parallelogram_base"], "parallelogram_base");
  if (j.contains("m")) {
    if (!j["m"].is_number_integer()) throw ConfigError("m: expected an integer");
    c.m = j["m"].get<int>();
  }
  if (j.contains("z")) c.z = complex_list(j["z"], "z");
  if (j.contains("mu_grid")) c.mu_grid = complex_list(j["mu_grid"], "mu_grid");
  if (j.contains("mu"))
    c.mu = complex_from(j["mu"], "mu");
  else if (!c.mu_grid.empty())
    c.mu = c.mu_grid.front();
  if (j.contains("subsets")) {
    const json& s = j["subsets"];
    if (s.is_string() && s.get<std::string>() == "all") {
      c.subsets.reset();
    } else if (s.is_array()) {
      std::vector<Subset> list;
      for (const auto& e : s) {
        if (!e.is_array()) throw ConfigError("subsets: expected \"all\" or a list of index lists");
        Subset I;
        for (const auto& i : e) {
          if (!i.is_number_integer()) throw ConfigError("subsets: indices must be integers (1-based)");
          I.push_back(i.get<int>() - 1);
        }
        std::sort(I.begin(), I.end());
        list.push_back(I);
      }
      c.subsets = list;
    } else {
      throw ConfigError("subsets: expected \"all\" or a list of index lists");
    }
  }
  if (j.contains("tolerances")) c.tol.override_with(j["tolerances"]);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || (!j["seed"].is_number_unsigned() && j["seed"].get<std::int64_t>() < 0))
      throw ConfigError("seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::validate() const {
  if (!std::isfinite(tau.real()) || !(tau.imag() > 0.0)) {
    std::ostringstream os;
    os << "tau: Im(tau) must be positive, got tau = " << tau.real() << (tau.imag() < 0 ? "" : "+") << tau.imag()
       << "i";
    throw ConfigError(os.str());
  }
  try {
    (void)Torus(tau);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("tau: ") + e.what());
  }
  if (m < 1 || m > 6) throw ConfigError("m: must be between 1 and 6, got " + std::to_string(m));
  if (!std::isfinite(mu.real()) || !std::isfinite(mu.imag())) throw ConfigError("mu: must be finite");
  try {
    (void)problem();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("z: ") + e.what());
  }
  for (size_t i = 1; i < mu_grid.size(); ++i)
    if (std::abs(mu_grid[i].imag()) > std::abs(mu_grid[i - 1].imag()))
      throw ConfigError("mu_grid: must be sorted by |Im mu| descending");
  if (subsets) {
    if (subsets->empty()) throw ConfigError("subsets: empty list");
    for (const Subset& I : *subsets) {
      const std::string lab = subset_label(I);
      if (static_cast<int>(I.size()) != m)
        throw ConfigError("subsets: " + lab + " must have exactly m = " + std::to_string(m) + " entries");
      for (size_t k = 0; k < I.size(); ++k) {
        if (I[k] < 0 || I[k] >= 2 * m)
          throw ConfigError("subsets: " + lab + " has an index outside 1.." + std::to_string(2 * m));
        if (k && I[k] == I[k - 1]) throw ConfigError("subsets: " + lab + " repeats an index");
      }
    }
  }
}

json ExperimentConfig::to_json() const {
  json j;
  j["tau"] = ebethe::to_json(tau);
  j["parallelogram_base"] = ebethe::to_json(base);
  j["m"] = m;
  j["z"] = ebethe::to_json(z);
  j["mu"] = ebethe::to_json(mu);
  j["mu_grid"] = ebethe::to_json(mu_grid);
  if (subsets) {
    json s = json::array();
    for (const Subset& I : *subsets) s.push_back(subset_json(I));
    j["subsets"] = s;
  } else {
    j["subsets"] = "all";
  }
  j["tolerances"] = tol.values();
  j["seed"] = seed;
  return j;
}

std::vector<Subset> ExperimentConfig::subset_list() const { return subsets ? *subsets : all_subsets(2 * m, m); }

// ---------------------------------------------------------------- report

Check Check::below(std::string name, double measured, double tol) {
  return {std::move(name), measured, tol, Relation::below, measured < tol};
}

Check Check::above(std::string name, double measured, double tol) {
  return {std::move(name), measured, tol, Relation::above, measured > tol};
}

Check Check::equal(std::string name, double measured, double expected) {
  return {std::move(name), measured, expected, Relation::equal, measured == expected};
}

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

int RunReport::exit_code(bool strict) const {
  if (!passed()) return 1;
  if (strict && !warnings.empty()) return 1;
  return 0;
}

json to_json(cplx c) { return json::array({c.real(), c.imag()}); }

json to_json(const std::vector<cplx>& v) {
  json a = json::array();
  for (cplx c : v) a.push_back(to_json(c));
  return a;
}

json subset_json(const Subset& I) {
  json a = json::array();
  for (int i : I) a.push_back(i + 1);
  return a;
}

json RunReport::to_json(bool with_timings) const {
  static const char* rel[] = {"<", ">", "=="};
  json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["config"] = config.to_json();
  json cs = json::array();
  int failed = 0;
  for (const auto& c : checks) {
    cs.push_back({{"name", c.name},
                  {"pass", c.pass},
                  {"measured", c.measured},
                  {"tolerance", c.tolerance},
                  {"relation", rel[static_cast<int>(c.relation)]}});
    failed += !c.pass;
  }
  j["checks"] = cs;
  j["warnings"] = warnings;
  j["results"] = results;
  j["status"] = passed() ? "pass" : "fail";
  j["summary"] = {{"checks", checks.size()}, {"failed", failed}, {"warnings", warnings.size()}};
  if (with_timings) {
    json t = json::object();
    for (const auto& [k, v] : timings) t[k] = v;
    j["timings"] = t;
  }
  return j;
}

std::string RunReport::to_text(bool with_timings) const {
  static const char* rel[] = {"<", ">", "=="};
  std::ostringstream os;
  os << "command " << command << "  schema " << kReportSchema << "  seed " << config.seed << '\n';
  os << "tau " << ebethe::to_json(config.tau).dump() << "  m " << config.m << "  mu " << ebethe::to_json(config.mu).dump() << '\n';
  int failed = 0;
  for (const auto& c : checks) {
    os << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(34) << c.name << " measured " << fmt(c.measured)
       << "  " << rel[static_cast<int>(c.relation)] << ' ' << fmt(c.tolerance) << '\n';
    failed += !c.pass;
  }
  for (const auto& w : warnings) os << "warning: " << w << '\n';
  for (const auto& [k, v] : results.items()) {
    if (v.is_array() && !v.empty() && v.front().is_object()) {
      os << k << ":\n";
      for (const auto& e : v) os << "  " << e.dump() << '\n';
    } else {
      os << k << ": " << v.dump() << '\n';
    }
  }
  if (with_timings)
    for (const auto& [k, v] : timings) os << "time " << k << ' ' << fmt(v) << " s\n";
  os << (failed ? "FAIL" : "PASS") << ": " << checks.size() - failed << '/' << checks.size() << " checks passed, "
     << warnings.size() << " warnings\n";
  return os.str();
}

// ---------------------------------------------------------------- identities

std::vector<Check> identity_checks(const Torus& c, std::uint64_t seed, int samples, const Tolerances& tol) {
  std::mt19937_64 rng(seed);
  const cplx tau = c.tau();
  const double id_tol = tol["identity"];
  std::vector<Check> out;

  out.push_back(Check::below("theta_prime_origin", std::abs(theta_derivs(0.0, c, 1)[1] - 1.0), tol["theta_prime"]));

  double heat = 0.0, prod = 0.0, qp_theta = 0.0, qp_rho = 0.0, qp_sigma = 0.0, qp_eta = 0.0;
  double parity = 0.0, phi_sym = 0.0, t5 = 0.0, t55 = 0.0, id2 = 0.0;
  const double h = tol["heat_step"];
  const std::vector<LatticePoint> shifts = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {2, -1}};
  for (int i = 0; i < samples; ++i) {
    const cplx x = random_point(rng, c), w = random_point(rng, c);

    auto th1 = [&](cplx t) {
      const Torus ct(t);
      return theta(x, ct) * ct.theta1_factor();
    };
    const cplx dtau = (th1(tau + h) - th1(tau - h)) / (2.0 * h);
    const cplx th1pp = theta_derivs(x, c, 2)[2] * c.theta1_factor();
    heat = std::max(heat, std::abs(2.0 * k2PiI * dtau - th1pp) / std::abs(th1pp));

    prod = std::max(prod, std::abs(theta(x, c) - theta_series(x, c)) / std::abs(theta_series(x, c)));

    const cplx th = theta(x, c), r = rho(x, c), s = sigma(x, w, c), e = eta(x, c);
    for (const LatticePoint& p : shifts) {
      const double l = static_cast<double>(p.l);
      const cplx y = x + c.point(p);
      const cplx th_expect =
          ((p.k + p.l) % 2 ? -1.0 : 1.0) * std::exp(-kI * kPi * l * l * tau - k2PiI * l * x) * th;
      qp_theta = std::max(qp_theta, std::abs(theta(y, c) - th_expect) / std::abs(th_expect));
      qp_rho = std::max(qp_rho, rel(rho(y, c), r - k2PiI * l));
      const cplx s_expect = std::exp(-k2PiI * l * w) * s;
      qp_sigma = std::max(qp_sigma, std::abs(sigma(y, w, c) - s_expect) / std::abs(s_expect));
      qp_eta = std::max(qp_eta, rel(eta(y, c), e - 2.0 * k2PiI * l * r + (k2PiI * l) * (k2PiI * l)));
    }
    parity = std::max(parity, std::abs(sigma(-x, -w, c) + s) / std::abs(s));
    if (c.distance_mod(x, w) > 0.05) {
      const cplx ph = phi(x, w, c);
      phi_sym = std::max(phi_sym, rel(phi(-x, -w, c), ph));
      phi_sym = std::max(phi_sym, rel(phi(x, 0.0, c), -rho_prime(x, c)));
      phi_sym = std::max(phi_sym, rel(sigma(w, -x, c) * (rho(x - w, c) - rho(x, c)), ph));
    }
    t55 = std::max(t55, rel(s * sigma(x, -w, c), rho_prime(w, c) - rho_prime(x, c)));

    cplx z1, z2;
    do {
      z1 = random_point(rng, c);
      z2 = random_point(rng, c);
    } while (c.distance_mod(z1, z2) < 0.1 || c.distance_mod(w, z1 - z2) < 0.05 || c.distance_mod(x, z1) < 0.05 ||
             c.distance_mod(x, z2) < 0.05);
    const cplx lhs = sigma(x - z1, w, c) * sigma(x - z2, -w, c) / sigma(z1 - z2, -w, c) + rho(x - z2, c) - rho(x - z1, c);
    t5 = std::max(t5, rel(lhs, rho(w, c) - rho(w - (z1 - z2), c)));

    const cplx r12 = rho(z1 - z2, c);
    auto f = [&](cplx y) { return rho(y - z1, c) * rho(y - z2, c) + r12 * rho(y - z2, c) - r12 * rho(y - z1, c); };
    const cplx e12 = eta(z1 - z2, c);
    id2 = std::max({id2, rel(circle_mean(f, z1), e12), rel(circle_mean(f, z2), e12)});
  }
  out.push_back(Check::below("heat_equation", heat, tol["heat"]));
  out.push_back(Check::below("theta_product_vs_series", prod, id_tol));
  out.push_back(Check::below("theta_quasi_periodicity", qp_theta, id_tol));
  out.push_back(Check::below("rho_quasi_periodicity", qp_rho, id_tol));
  out.push_back(Check::below("sigma_quasi_periodicity", qp_sigma, id_tol));
  out.push_back(Check::below("eta_quasi_periodicity", qp_eta, id_tol));
  out.push_back(Check::below("sigma_parity", parity, id_tol));
  out.push_back(Check::below("phi_identities", phi_sym, id_tol));
  out.push_back(Check::below("three_term_identity", t5, id_tol));
  out.push_back(Check::below("sigma_product_identity", t55, id_tol));
  out.push_back(Check::below("removable_combination_eta", id2, id_tol));
  return out;
}

std::vector<cplx> lambda_samples(const Torus& ctx, cplx base, std::uint64_t seed, int count, double eps) {
  return x_samples(ctx, base, unit_shift(seed, 0), count, {0.0}, eps);
}

RunReport cmd_identities(const ExperimentConfig& c) {
  Stopwatch sw;
  RunReport r = start("identities", c);
  r.checks = identity_checks(c.torus(), c.seed, kIdentitySamples, c.tol);
  r.results["samples"] = kIdentitySamples;
  add_checks_csv(r);
  r.timings.emplace_back("identities", sw.seconds());
  return r;
}

// ---------------------------------------------------------------- solve

RunReport cmd_solve(const ExperimentConfig& c) {
  Stopwatch sw;
  RunReport r = start("solve", c);
  const BetheProblem p = c.problem();
  const BetheOptions o = c.tol.bethe();
  json records = json::array();
  for (const Subset& I : c.subset_list()) {
    const std::string lab = subset_label(I);
    json rec;
    rec["subset"] = subset_json(I);
    try {
      const BetheSolution s = solve_subset(p, I, o);
      rec.update(solution_json(s));
      rec["accepted"] = s.accepted(o);
      rec["continuation"] = s.continuation;
      if (s.accepted(o)) {
        const auto res = residue_certificate(s);
        const double worst = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
        rec["residue"] = worst;
        r.checks.push_back(Check::below("bae_residual" + lab, s.residual, o.accept_tol));
        r.checks.push_back(Check::below("zero_residue" + lab, worst, c.tol["residue"]));
      } else {
        r.warnings.push_back("subset " + lab + ": " + to_string(s.status) + " (residual " + fmt(s.residual) + ")");
      }
    } catch (const Error& e) {
      rec["status"] = "no_convergence";
      rec["accepted"] = false;
      rec["error"] = e.what();
      r.warnings.push_back("subset " + lab + ": no_convergence (" + e.what() + ")");
    }
    records.push_back(rec);
  }
  r.results["solutions"] = records;
  add_checks_csv(r);
  r.timings.emplace_back("solve", sw.seconds());
  return r;
}

// ---------------------------------------------------------------- fiber

RunReport cmd_fiber(const ExperimentConfig& c) {
  Stopwatch sw;
  RunReport r = start("fiber", c);
  const BetheProblem p = c.problem();
  const FiberOptions fo = c.tol.fiber();
  const FiberReport fr = c.subsets ? enumerate_fiber(p, *c.subsets, fo) : enumerate_fiber(p, fo);
  r.timings.emplace_back("enumerate", sw.seconds());

  json pts = json::array();
  double wr = 0.0;
  int uncertified = 0;
  for (const FiberPoint& pt : fr.points) {
    json j;
    j["seed_subset"] = subset_json(pt.seed_subset);
    j["solution"] = solution_json(pt.solution);
    j["partner"] = solution_json(pt.partner);
    j["label"] = pt.label;
    j["wr_residual"] = pt.wr_residual;
    j["separation"] = pt.separation;
    j["jacobian_condition"] = pt.jacobian_condition;
    j["certified"] = pt.certified(fo);
    pts.push_back(j);
    wr = std::max(wr, pt.wr_residual);
    uncertified += !pt.certified(fo);
  }
  int bad_pairs = 0;
  json pairs = json::array();
  for (const auto& [a, b] : fr.pairing) {
    pairs.push_back({subset_json(a), subset_json(b)});
    bad_pairs += complement(a, 2 * c.m) != b;
  }
  json fails = json::array();
  for (const auto& f : fr.failures) fails.push_back({{"subset", subset_json(f.subset)}, {"reason", f.reason}});

  r.results["count"] = fr.count;
  r.results["expected"] = fr.expected;
  r.results["points"] = pts;
  r.results["pairing"] = pairs;
  r.results["failures"] = fails;
  r.results["duplicates"] = fr.duplicates;
  r.results["min_point_distance"] = fr.min_point_distance;
  r.warnings = fr.warnings;

  r.checks.push_back(Check::equal("fiber_count", fr.count, fr.expected));
  r.checks.push_back(Check::equal("failed_subsets", static_cast<double>(fr.failures.size()), 0.0));
  r.checks.push_back(Check::equal("uncertified_points", uncertified, 0.0));
  if (fr.count >= 2) r.checks.push_back(Check::above("min_point_distance", fr.min_point_distance, c.tol["distinct"]));
  r.checks.push_back(Check::below("max_wronskian_residual", wr, c.tol["wronskian"]));
  r.checks.push_back(Check::equal("involution_pairs", static_cast<double>(fr.pairing.size()), fr.expected / 2));
  r.checks.push_back(Check::equal("non_complementary_pairs", bad_pairs, 0.0));

  std::ostringstream csv;
  csv << "abs_mu,mu_re,mu_im,count,expected,certified\n" << std::setprecision(17);
  const std::vector<cplx> grid = c.mu_grid.empty() ? std::vector<cplx>{c.mu} : c.mu_grid;
  json rows = json::array();
  for (cplx mu : grid) {
    const FiberReport g = mu == c.mu && !c.subsets ? fr : enumerate_fiber(p.with_mu(mu), fo);
    const bool ok = g.certified(fo) && g.asymptotic_labels();
    csv << std::abs(mu) << ',' << mu.real() << ',' << mu.imag() << ',' << g.count << ',' << g.expected << ','
        << (ok ? 1 : 0) << '\n';
    rows.push_back({{"mu", to_json(mu)}, {"count", g.count}, {"certified", ok}});
  }
  r.csv = csv.str();
  r.results["scan"] = rows;
  if (!c.mu_grid.empty()) {
    const MuMinEstimate est = estimate_mu_min(p, c.mu_grid, fo);
    r.results["mu_min"] = est.threshold ? json(*est.threshold) : json(nullptr);
    if (!est.threshold) r.warnings.push_back("mu_min: no grid point yields a certified, asymptotically labeled fiber");
  }
  r.timings.emplace_back("fiber", sw.seconds());
  return r;
}

// ---------------------------------------------------------------- eigen

namespace {

struct EigenSuite {
  std::vector<Check> checks;
  json weyl_row;
  std::optional<BetheSolution> partner;
};

double diff_norm(const ZeroWeightVector& a, const ZeroWeightVector& b) { return (a - b).norm(); }

EigenSuite eigen_suite(const BetheSolution& s, const ExperimentConfig& c, const std::vector<cplx>& lambdas,
                       double xshift) {
  const BetheProblem& p = s.problem;
  const Torus& ctx = p.torus();
  const std::string lab = s.subset_tag ? subset_label(*s.subset_tag) : std::string("[?]");
  const WeightBasis basis(p.m());
  EigenSuite out;

  const KzbEigenvalues ev = kzb_eigenvalues(s);
  double eig = 0.0, sum = 0.0;
  std::vector<VJet> psis;
  for (cplx lam : lambdas) {
    const VJet F = psi_jet(lam, s, 2);
    psis.push_back(F);
    const double nf = F.value().norm();
    ZeroWeightVector tot = ZeroWeightVector::Zero(basis.dim());
    for (int a = 0; a <= 2 * p.m(); ++a) {
      const cplx e = a == 0 ? ev.E0 : ev.E[a - 1];
      const ZeroWeightVector HF = apply_kzb(a, F, lam, p.z(), ctx).value();
      eig = std::max(eig, (HF - e * F.value()).norm() / nf);
      if (a > 0) tot += HF;
    }
    sum = std::max(sum, tot.norm() / nf);
  }
  out.checks.push_back(Check::below("kzb_eigen_relation" + lab, eig, c.tol["eigen"]));
  out.checks.push_back(Check::below("kzb_sum_rule" + lab, sum, c.tol["kzb_sum"]));

  std::optional<BetheSolution> partner;
  std::optional<ThetaPoly> g;
  std::vector<cplx> avoid = p.z();
  avoid.insert(avoid.end(), s.t.begin(), s.t.end());
  try {
    partner = analytic_involution(s, c.tol.bethe());
    avoid.insert(avoid.end(), partner->t.begin(), partner->t.end());
  } catch (const Error&) {
  }
  const auto xs = x_samples(ctx, p.cell().base(), xshift, kLambdaSamples, avoid, 0.05);

  double s2 = 0.0, per = 0.0;
  for (size_t k = 0; k < lambdas.size(); ++k) {
    const VJet& F = psis[k];
    const cplx x = xs[k], lam = lambdas[k];
    const ZeroWeightVector A = s2_via_kzb(x, F, lam, p.z(), ctx).value();
    const ZeroWeightVector B = apply_rst_n2(x, F, lam, p.z(), ctx).value();
    const cplx b2 = fundamental_b2(x, s);
    const ZeroWeightVector C = b2 * F.value();
    const double scale = std::max({A.norm(), B.norm(), C.norm(), F.value().norm()});
    s2 = std::max({s2, diff_norm(A, B) / scale, diff_norm(A, C) / scale, diff_norm(B, C) / scale});
    per = std::max({per, rel(fundamental_b2(x + 1.0, s), b2), rel(fundamental_b2(x + ctx.tau(), s), b2)});
  }
  out.checks.push_back(Check::below("s2_triple_agreement" + lab, s2, c.tol["s2"]));
  out.checks.push_back(Check::below("b2_double_periodicity" + lab, per, c.tol["periodic"]));

  double kern = kInf;
  try {
    const ThetaPoly f = bethe_f(s);
    const ThetaPoly gg = solve_wronskian(f, bethe_h(s), p.cell());
    kern = 0.0;
    for (cplx x : xs) {
      const Taylor lw = log_derivative(wronskian_jet(f, gg, x, 3).jet);
      const cplx b2 = fundamental_b2(x, s);
      for (const ThetaPoly* u : {&f, &gg}) {
        const Taylor L = log_derivative(u->jet(x, 3).jet) - 0.5 * lw;
        kern = std::max(kern, rel(L.deriv(1) + L[0] * L[0], -b2));
      }
    }
  } catch (const Error&) {
  }
  out.checks.push_back(Check::below("kernel_log_derivative" + lab, kern, c.tol["kernel"]));

  double spread = kInf, match = kInf;
  cplx ratio = 0.0;
  if (partner) {
    const VField sf = weyl_on_function(psi_field(s), basis);
    const VField pf = psi_field(*partner);
    spread = 0.0;
    for (size_t k = 0; k < lambdas.size(); ++k) {
      const ZeroWeightVector a = sf(lambdas[k], 0).value();
      const ZeroWeightVector b = pf(lambdas[k], 0).value();
      if (k == 0) {
        Eigen::Index imax;
        b.cwiseAbs().maxCoeff(&imax);
        ratio = a[imax] / b[imax];
      }
      for (int i = 0; i < basis.dim(); ++i) spread = std::max(spread, std::abs(a[i] / b[i] - ratio) / std::abs(ratio));
    }
    match = 0.0;
    for (int k = 0; k < kSeparationSamples; ++k)
      match = std::max(match, rel(fundamental_b2(xs[k], *partner), fundamental_b2(xs[k], s)));
  }
  out.checks.push_back(Check::below("weyl_ratio_constancy" + lab, spread, c.tol["weyl"]));
  out.checks.push_back(Check::below("b2_partner_agreement" + lab, match, c.tol["partner_match"]));
  out.weyl_row = {{"subset", s.subset_tag ? subset_json(*s.subset_tag) : json(nullptr)},
                  {"partner_subset", partner && partner->subset_tag ? subset_json(*partner->subset_tag) : json(nullptr)},
                  {"ratio", to_json(ratio)},
                  {"spread", spread}};
  out.partner = partner;
  return out;
}

}  // namespace

RunReport cmd_eigen(const ExperimentConfig& c) {
  Stopwatch sw;
  RunReport r = start("eigen", c);
  const BetheProblem p = c.problem();
  const BetheOptions o = c.tol.bethe();
  const auto lambdas = lambda_samples(p.torus(), p.cell().base(), c.seed, kLambdaSamples, c.tol["lambda_exclusion"]);
  const double xshift = unit_shift(c.seed, 1);

  json weyl = json::array();
  json eig = json::array();
  std::vector<std::pair<BetheSolution, std::optional<BetheSolution>>> sols;
  for (const Subset& I : c.subset_list()) {
    std::optional<BetheSolution> solved;
    try {
      solved = solve_subset(p, I, o);
    } catch (const Error& e) {
      r.warnings.push_back("subset " + subset_label(I) + ": no_convergence (" + e.what() + "), skipped");
      continue;
    }
    const BetheSolution& s = *solved;
    if (!s.accepted(o)) {
      r.warnings.push_back("subset " + subset_label(I) + ": " + to_string(s.status) + ", skipped");
      continue;
    }
    EigenSuite suite;
    try {
      suite = eigen_suite(s, c, lambdas, xshift);
    } catch (const Error& e) {
      r.checks.push_back(Check::below("eigen_suite" + subset_label(I), kInf, 0.0));
      r.warnings.push_back("subset " + subset_label(I) + ": " + e.what());
      continue;
    }
    r.checks.insert(r.checks.end(), suite.checks.begin(), suite.checks.end());
    weyl.push_back(suite.weyl_row);
    const KzbEigenvalues ev = kzb_eigenvalues(s);
    std::vector<cplx> all = {ev.E0};
    all.insert(all.end(), ev.E.begin(), ev.E.end());
    eig.push_back({{"subset", subset_json(I)}, {"eigenvalues", to_json(all)}});
    sols.emplace_back(s, suite.partner);
  }

  // B2 separates orbits: it agrees exactly on involution partners
  if (sols.size() >= 2) {
    std::vector<const BetheSolution*> items;
    std::vector<int> orbit;
    std::vector<cplx> avoid = p.z();
    for (size_t i = 0; i < sols.size(); ++i) {
      items.push_back(&sols[i].first);
      orbit.push_back(static_cast<int>(i));
      if (sols[i].second) {
        items.push_back(&*sols[i].second);
        orbit.push_back(static_cast<int>(i));
      }
    }
    for (const auto* s : items) avoid.insert(avoid.end(), s->t.begin(), s->t.end());
    const auto xs = x_samples(p.torus(), p.cell().base(), unit_shift(c.seed, 2), kSeparationSamples, avoid, 0.05);
    std::vector<std::vector<cplx>> b2(items.size());
    for (size_t i = 0; i < items.size(); ++i)
      for (cplx x : xs) b2[i].push_back(fundamental_b2(x, *items[i]));
    double same = 0.0, apart = kInf;
    for (size_t i = 0; i < items.size(); ++i)
      for (size_t j = i + 1; j < items.size(); ++j) {
        double d = 0.0;
        for (size_t k = 0; k < xs.size(); ++k) d = std::max(d, rel(b2[j][k], b2[i][k]));
        if (orbit[i] == orbit[j])
          same = std::max(same, d);
        else
          apart = std::min(apart, d);
      }
    r.checks.push_back(Check::below("b2_same_orbit", same, c.tol["partner_match"]));
    r.checks.push_back(Check::above("b2_distinct_orbits", apart, c.tol["separation_gap"]));
  }

  r.results["lambda_samples"] = to_json(lambdas);
  r.results["eigenvalues"] = eig;
  r.results["weyl_ratio_table"] = weyl;
  add_checks_csv(r);
  r.timings.emplace_back("eigen", sw.seconds());
  return r;
}

}  // namespace ebethe
