#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "ebethe/errors.hpp"
#include "ebethe/report.hpp"
#include "json.hpp"

using namespace ebethe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// stdout only, or stdout and stderr merged
Run run_cli(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string(EBETHE_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("ebethe_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_config(const std::string& name, const json& j) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << j.dump();
  return p.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const json kDegreeOne = {{"m", 1}, {"z", {0.2, 0.7}}};

}  // namespace

TEST_CASE("complex literals") {
  CHECK(parse_complex("6i") == cplx(0, 6));
  CHECK(parse_complex("-2.5") == cplx(-2.5, 0));
  CHECK(parse_complex("0.3+6i") == cplx(0.3, 6));
  CHECK(parse_complex("0.3 - 1e1i") == cplx(0.3, -10));
  CHECK(parse_complex("-i") == cplx(0, -1));
  CHECK_THROWS_AS(parse_complex("6j"), ConfigError);
  CHECK_THROWS_AS(parse_complex(""), ConfigError);
  const auto g = parse_mu_grid("40i,20i, 10i");
  REQUIRE(g.size() == 3);
  CHECK(g[2] == cplx(0, 10));
}

TEST_CASE("config loading and validation") {
  const ExperimentConfig d = ExperimentConfig::from_json(json::object());
  CHECK(d.m == 2);
  CHECK(d.mu == cplx(0, 6));
  CHECK(d.subset_list().size() == 6);

  const auto c = ExperimentConfig::from_json(
      {{"tau", {0.1, 1.2}}, {"mu", "0.3+5i"}, {"subsets", {{1, 3}, {4, 2}}}, {"seed", 9}, {"tolerances", {{"eigen", 1e-9}}}});
  CHECK(c.tau == cplx(0.1, 1.2));
  CHECK(c.mu == cplx(0.3, 5));
  CHECK(c.subset_list() == std::vector<Subset>{{0, 2}, {1, 3}});
  CHECK(c.seed == 9);
  CHECK(c.tol["eigen"] == 1e-9);
  CHECK(c.tol["weyl"] == 1e-8);

  // mu defaults to the head of the grid
  CHECK(ExperimentConfig::from_json({{"mu_grid", {{0, 8}, {0, 4}}}}).mu == cplx(0, 8));

  auto rejects = [](const json& j, const std::string& needle) {
    try {
      (void)ExperimentConfig::from_json(j);
      FAIL("accepted " << j.dump());
    } catch (const ConfigError& e) {
      CAPTURE(e.what());
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  rejects({{"tau", {0.3, -0.1}}}, "Im(tau) must be positive");
  rejects({{"tau", {0.3, 0.0}}}, "Im(tau) must be positive");
  rejects({{"z", {0.13, {0.41, 0.12}, {0.55, 0.31}, {1.77, 0.05}}}}, "z[3]");
  rejects({{"z", {0.13, {0.41, 0.12}, {0.55, 0.31}}}}, "2m = 4");
  rejects({{"z", {0.13, 0.13, {0.55, 0.31}, {0.77, 0.05}}}}, "pairwise distinct");
  rejects({{"m", 0}}, "between 1 and 6");
  rejects({{"mu_grid", {{0, 4}, {0, 8}}}}, "descending");
  rejects({{"subsets", {{1, 5}}}}, "outside 1..4");
  rejects({{"subsets", {{1, 1}}}}, "repeats");
  rejects({{"subsets", {{1}}}}, "exactly m = 2");
  rejects({{"tolerances", {{"eigne", 1e-8}}}}, "unknown tolerance");
  rejects({{"tolerances", {{"eigen", -1.0}}}}, "positive finite");
  rejects({{"tua", {0, 1}}}, "unknown key");
  rejects({{"seed", -3}}, "non-negative");
}

TEST_CASE("identities on the default config") {
  const Run r = run_cli("identities");
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("PASS: 12/12") != std::string::npos);
}

TEST_CASE("configuration errors exit with status 2") {
  const Run r = run_cli("identities --config " + write_config("bad_tau.json", {{"tau", {0.3, -0.1}}}), true);
  CHECK(r.code == 2);
  CHECK(r.out.find("Im(tau) must be positive") != std::string::npos);
  CHECK(run_cli("identities --config " + (scratch_dir() / "missing.json").string()).code == 2);
  CHECK(run_cli("fiber --mu-grid 4i,8i").code == 2);
  CHECK(run_cli("fiber --mu-grid 4x").code == 2);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("transform").code == 2);
  const fs::path broken = scratch_dir() / "broken.json";
  std::ofstream(broken) << "{\"tau\": [0, 1";
  CHECK(run_cli("solve --config " + broken.string()).code == 2);
}

TEST_CASE("JSON reports follow the schema") {
  const Run r = run_cli("identities --json");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["schema"] == kReportSchema);
  CHECK(j["command"] == "identities");
  CHECK(j["status"] == "pass");
  CHECK_FALSE(j.contains("timings"));
  REQUIRE(j["checks"].is_array());
  CHECK(j["checks"].size() == j["summary"]["checks"].get<size_t>());
  for (const auto& c : j["checks"]) {
    CHECK(c["name"].is_string());
    CHECK(c["pass"].is_boolean());
    CHECK(c["measured"].is_number());
    CHECK(c["tolerance"].is_number());
    CHECK(c["relation"].is_string());
  }
  // every tolerance is echoed
  const Tolerances defaults;
  for (const auto& [k, v] : defaults.values()) {
    CAPTURE(k);
    REQUIRE(j["config"]["tolerances"].contains(k));
    CHECK(j["config"]["tolerances"][k].get<double>() == v);
  }
  // complex numbers as [re, im]
  CHECK(j["config"]["tau"] == json::array({0.0, 1.0}));
  CHECK(j["config"]["z"][1] == json::array({0.41, 0.12}));
  CHECK(json::parse(run_cli("identities --json --timings").out).contains("timings"));
}

TEST_CASE("reports are byte-identical for the same config and seed") {
  for (const char* cmd : {"solve --json", "eigen --json --seed 7", "fiber --json", "identities --seed 3"}) {
    CAPTURE(cmd);
    const Run a = run_cli(cmd), b = run_cli(cmd);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
  }
  const json a = json::parse(run_cli("eigen --json --seed 7").out);
  const json b = json::parse(run_cli("eigen --json --seed 8").out);
  CHECK(a["results"]["lambda_samples"] != b["results"]["lambda_samples"]);
}

TEST_CASE("solve records one solution per subset") {
  const Run r = run_cli("solve --json --config " + write_config("m1.json", kDegreeOne));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  REQUIRE(j["results"]["solutions"].size() == 2);
  for (const auto& s : j["results"]["solutions"]) {
    CHECK(s["status"] == "converged");
    CHECK(s["t"].size() == 1);
    CHECK(s["t"][0].size() == 2);
    CHECK(s["residual"].get<double>() < 1e-10);
    CHECK(s["subset"] == s["subset_tag"]);
  }
}

TEST_CASE("a solve that misses its target is a warning, not a failure") {
  const std::string cfg =
      write_config("strict.json", {{"tolerances", {{"bae_residual", 1e-18}}}, {"subsets", {{1, 2}}}});
  const Run r = run_cli("solve --json --config " + cfg);
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["results"]["solutions"][0]["status"] == "no_convergence");
  CHECK(j["warnings"].size() == 1);
  CHECK(run_cli("solve --strict --config " + cfg).code == 1);

  // mu = 0 leaves the seed regime altogether
  const Run z = run_cli("solve --json --config " + write_config("mu0.json", {{"mu", 0}, {"subsets", {{1, 2}}}}));
  CHECK(z.code == 0);
  CHECK(json::parse(z.out)["results"]["solutions"][0]["accepted"] == false);
}

TEST_CASE("fiber of the degree two fixture and the mu scan") {
  const fs::path csv = scratch_dir() / "scan.csv";
  const Run r = run_cli("fiber --json --mu-grid 10i,6i,3i --csv " + csv.string());
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["results"]["count"] == 6);
  CHECK(j["results"]["pairing"].size() == 3);
  CHECK(j["results"]["mu_min"].get<double>() <= 6.0);
  CHECK(j["results"]["scan"].size() == 3);

  std::istringstream in(read_file(csv.string()));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "abs_mu,mu_re,mu_im,count,expected,certified");
  CHECK(rows[1].rfind("10,", 0) == 0);
  for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].find(",6,6,") != std::string::npos);
}

TEST_CASE("incomplete fiber gives a partial report") {
  const Run r = run_cli("fiber --json --config " + write_config("partial.json", {{"subsets", {{1, 2}, {3, 4}}}}));
  CHECK(r.code == 1);
  const json j = json::parse(r.out);
  CHECK(j["status"] == "fail");
  CHECK(j["results"]["count"] == 2);
  CHECK(j["results"]["points"].size() == 2);
  bool count_failed = false;
  for (const auto& c : j["checks"])
    if (c["name"] == "fiber_count") count_failed = !c["pass"].get<bool>();
  CHECK(count_failed);

  // integer mu: every subset fails and is named
  const Run f = run_cli("fiber --json --config " + write_config("intmu.json", {{"mu", 3}}));
  CHECK(f.code == 1);
  CHECK(json::parse(f.out)["results"]["failures"].size() == 6);
}

TEST_CASE("eigen suite on the degree one fixture") {
  const Run r = run_cli("eigen --json --config " + write_config("m1e.json", kDegreeOne));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["status"] == "pass");
  CHECK(j["results"]["weyl_ratio_table"].size() == 2);
  CHECK(j["results"]["lambda_samples"].size() == 10);
  const Torus ctx(cplx(0, 1));
  for (const auto& l : j["results"]["lambda_samples"])
    CHECK(ctx.lattice_distance(cplx(l[0].get<double>(), l[1].get<double>())) > 0.05);
  for (const auto& c : j["checks"]) {
    CAPTURE(c["name"]);
    CHECK(c["pass"] == true);
  }
}

TEST_CASE("lambda samples avoid the lattice neighbourhood") {
  const Torus ctx(cplx(0.2, 0.7));
  const auto s = lambda_samples(ctx, 0.0, 5, 200, 0.2);
  CHECK(s.size() == 200);
  for (cplx l : s) CHECK(ctx.lattice_distance(l) > 0.2);
  CHECK(lambda_samples(ctx, 0.0, 5, 10, 0.05) == lambda_samples(ctx, 0.0, 5, 10, 0.05));
}
