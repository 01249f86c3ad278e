#include <algorithm>
#include <random>

#include "doctest.h"
#include "ebethe/errors.hpp"
#include "ebethe/wronski.hpp"
#include "helpers.hpp"

using namespace ebethe;

namespace {

const std::vector<cplx> kFixtureZ = {0.13, cplx(0.41, 0.12), cplx(0.55, 0.31), cplx(0.77, 0.05)};
const cplx kBase(-0.05, -0.05);

BetheProblem fixture(cplx mu) { return BetheProblem(2, kFixtureZ, mu, Torus(cplx(0, 1)), kBase); }
BetheProblem fixture_m1(cplx mu) {
  return BetheProblem(1, {cplx(0.2, 0.3), cplx(0.7, 0.6)}, mu, Torus(cplx(0, 1)), kBase);
}

std::vector<cplx> imaginary_grid(std::initializer_list<double> s) {
  std::vector<cplx> g;
  for (double v : s) g.emplace_back(0.0, v);
  return g;
}

}  // namespace

TEST_CASE("fiber of the degree two fixture") {
  for (cplx mu : {6.0 * kI, 10.0 * kI}) {
    const FiberReport r = enumerate_fiber(fixture(mu));
    CAPTURE(mu);
    CHECK(r.expected == 6);
    CHECK(r.count == 6);
    CHECK(r.complete());
    CHECK(r.certified({}));
    CHECK(r.asymptotic_labels());
    CHECK(r.duplicates == 0);
    CHECK(r.min_point_distance > 1e-4);
    CHECK(r.pairing.size() == 3);
    for (const auto& [a, b] : r.pairing) CHECK(complement(a, 4) == b);
    CHECK(r.warnings.empty());
    for (const auto& pt : r.points) {
      CHECK(pt.wr_residual < 1e-9);
      CHECK(pt.separation > 1e-6);
      CHECK(pt.jacobian_condition < 1e6);
      CHECK(pt.label == 0);
    }
    CHECK_NOTHROW(require_complete(r));
  }
}

TEST_CASE("fiber of degree one") {
  const FiberReport r = enumerate_fiber(fixture_m1(6.0 * kI));
  CHECK(r.count == 2);
  CHECK(r.certified({}));
  REQUIRE(r.pairing.size() == 1);
  CHECK(r.pairing[0] == std::pair<Subset, Subset>{{0}, {1}});
}

TEST_CASE("enumeration is independent of scheduling") {
  FiberOptions seq;
  seq.parallel = false;
  const FiberReport a = enumerate_fiber(fixture(6.0 * kI));
  const FiberReport b = enumerate_fiber(fixture(6.0 * kI), seq);
  REQUIRE(a.count == b.count);
  for (int i = 0; i < a.count; ++i) {
    CHECK(a.points[i].seed_subset == b.points[i].seed_subset);
    CHECK(a.points[i].solution.t == b.points[i].solution.t);
  }
}

TEST_CASE("duplicate seeds collapse to one point") {
  const FiberReport r = enumerate_fiber(fixture(6.0 * kI), {{0, 2}, {0, 2}, {1, 3}});
  CHECK(r.count == 2);
  CHECK(r.duplicates == 1);
  CHECK_FALSE(r.complete());
  CHECK_THROWS_AS(require_complete(r), IncompleteFiber);
}

TEST_CASE("failing subsets are reported, not thrown") {
  // integer mu: the involution is undefined, so every subset fails
  const FiberReport r = enumerate_fiber(fixture(cplx(0.0, 6.0)).with_mu(3.0));
  CHECK(r.count == 0);
  CHECK(r.failures.size() == 6);
  CHECK_THROWS_AS(require_complete(r), IncompleteFiber);
}

TEST_CASE("threshold scans") {
  // degree one with well separated z: already complete at 2i
  const auto e1 = estimate_mu_min(fixture_m1(6.0 * kI), imaginary_grid({8, 6, 4, 2}));
  REQUIRE(e1.threshold);
  CHECK(*e1.threshold <= 2.0);
  const auto e2 = estimate_mu_min(fixture(6.0 * kI), imaginary_grid({8, 6, 4, 2}));
  REQUIRE(e2.threshold);
  CHECK(*e2.threshold <= 6.0);
  CHECK(e2.scan.size() == 4);
  CHECK_THROWS_AS(estimate_mu_min(fixture(6.0 * kI), imaginary_grid({2, 4})), std::invalid_argument);

  // bringing two points together pushes the threshold up
  const auto grid = imaginary_grid({40, 30, 20, 15, 10, 8, 6, 5, 4, 3, 2, 1.5, 1, 0.5});
  std::vector<double> thr;
  for (double d : {0.2, 0.05, 0.02}) {
    std::vector<cplx> z = kFixtureZ;
    z[1] = z[0] + d * cplx(0.6, 0.8);
    const auto e = estimate_mu_min(BetheProblem(2, z, 6.0 * kI, Torus(cplx(0, 1)), kBase), grid);
    REQUIRE(e.threshold);
    thr.push_back(*e.threshold);
  }
  CHECK(thr[0] <= thr[1]);
  CHECK(thr[1] <= thr[2]);
  CHECK(thr[0] < thr[2]);
}

TEST_CASE("ratios g/f") {
  const FiberReport r = enumerate_fiber(fixture(6.0 * kI));
  CHECK(count_ratios(r) == 6);
  CHECK(count_ratios(r) == r.count);
  for (const auto& pt : r.points) CHECK(ratio_derivative_residual(pt) < 1e-9);
  CHECK(count_ratios(fixture_m1(6.0 * kI)) == 2);
}

TEST_CASE("first-order asymptotic law, fitted and validated") {
  const std::vector<double> fit = {10.0, 20.0};
  for (const Subset& I : all_subsets(4, 2)) {
    double C = 0.0, Cp = 0.0;
    for (double s : fit) {
      const auto sol = solve_subset(fixture(s * kI), I);
      REQUIRE(sol.accepted());
      C = std::max(C, asymptotic_defect(sol) * s);
      Cp = std::max(Cp, asymptotic_defect(analytic_involution(sol)) * s);
    }
    const auto sol = solve_subset(fixture(40.0 * kI), I);
    REQUIRE(sol.accepted());
    CAPTURE(I);
    CHECK(asymptotic_defect(sol) <= 1.1 * C / 40.0);
    // the partner sits at z_{Ibar} - 1/(2 pi i mu)
    const auto partner = analytic_involution(sol);
    CHECK(partner.subset_tag == complement(I, 4));
    CHECK(asymptotic_defect(partner) <= 1.1 * Cp / 40.0);
  }
}

TEST_CASE("nonzero labels through the shift symmetry") {
  for (int k : {1, -1}) {
    const auto c = shifted_fiber_check(fixture(6.0 * kI), k);
    CAPTURE(k);
    CHECK(c.count == 6);
    CHECK(c.labels_ok);
    CHECK(c.max_wr_residual < 1e-9);
  }
}

TEST_CASE("degree one fiber against the G-system tracker") {
  for (cplx mu : {5.0 * kI, cplx(0.3, 5.0), 12.0 * kI}) {
    const BetheProblem p = BetheProblem(1, {cplx(0.2, 0.1), cplx(0.6, 0.35)}, mu, Torus(cplx(0, 1)));
    const FiberReport r = enumerate_fiber(p);
    REQUIRE(r.count == 2);
    for (const auto& pt : r.points) {
      const GSystemPoint g = g_system_m1(p, pt.seed_subset);
      CAPTURE(mu);
      CHECK(g.residual < 1e-12);
      CHECK(p.torus().distance_mod(g.t, pt.solution.t[0]) < 1e-9);
      CHECK(p.torus().distance_mod(g.s, pt.partner.t[0]) < 1e-9);
    }
  }
  CHECK_THROWS_AS(g_system_m1(fixture(6.0 * kI), {0, 1}), std::invalid_argument);
}
