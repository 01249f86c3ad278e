#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ebethe/errors.hpp"
#include "ebethe/report.hpp"

namespace {

constexpr int kExitConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elliptic Bethe ansatz verification driver"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, csv_path, mu_grid;
  std::optional<std::uint64_t> seed;
  bool json_out = false, strict = false, timings = false;
  app.add_option("--config", config_path, "experiment config (JSON); defaults to the degree two fixture");
  app.add_flag("--json", json_out, "print the report as JSON");
  app.add_option("--csv", csv_path, "write the command's table as CSV");
  app.add_option("--seed", seed, "sampling seed, overrides the config");
  app.add_flag("--strict", strict, "warnings count as failures");
  app.add_option("--mu-grid", mu_grid, "comma separated mu values for the fiber scan, e.g. 40i,20i,10i");
  app.add_flag("--timings", timings, "include wall-clock timings (the report is then not reproducible)");

  auto* identities = app.add_subcommand("identities", "special-function identity matrix");
  auto* solve = app.add_subcommand("solve", "Bethe equations for the configured subsets");
  auto* fiber = app.add_subcommand("fiber", "Wronski fiber enumeration, pairing and mu scan");
  auto* eigen = app.add_subcommand("eigen", "KZB, S2, B2 and Weyl checks on the Bethe eigenfunctions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  ebethe::RunReport report;
  try {
    ebethe::ExperimentConfig cfg = config_path.empty() ? ebethe::ExperimentConfig{} : ebethe::ExperimentConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    if (!mu_grid.empty()) cfg.mu_grid = ebethe::parse_mu_grid(mu_grid);
    cfg.validate();

    if (*identities)
      report = ebethe::cmd_identities(cfg);
    else if (*solve)
      report = ebethe::cmd_solve(cfg);
    else if (*fiber)
      report = ebethe::cmd_fiber(cfg);
    else if (*eigen)
      report = ebethe::cmd_eigen(cfg);
  } catch (const ebethe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  if (json_out)
    std::cout << report.to_json(timings).dump(2) << '\n';
  else
    std::cout << report.to_text(timings);

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) {
      std::cerr << "config error: cannot write " << csv_path << '\n';
      return kExitConfig;
    }
    out << report.csv;
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  return report.exit_code(strict);
}
