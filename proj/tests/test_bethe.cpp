#include <boost/math/tools/roots.hpp>
#include <random>

#include "doctest.h"
#include "ebethe/bethe.hpp"
#include "helpers.hpp"

using namespace ebethe;
using testutil::random_complex;
using testutil::random_point;

namespace {

const std::vector<cplx> kFixtureZ = {0.13, cplx(0.41, 0.12), cplx(0.55, 0.31), cplx(0.77, 0.05)};

// base chosen so that every z is interior (0.13 lies on the edge of the base-0 cell)
BetheProblem fixture(cplx mu) { return BetheProblem(2, kFixtureZ, mu, Torus(cplx(0, 1)), cplx(-0.05, -0.05)); }

// differences of logarithms, folded back onto the principal branch
cplx log_diff(cplx a, cplx b) {
  cplx d = a - b;
  d -= k2PiI * std::round(d.imag() / (2 * kPi));
  return d;
}

double max_abs(const Eigen::VectorXcd& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("problem validation") {
  const Torus ctx(cplx(0, 1));
  CHECK_NOTHROW(fixture(6.0 * kI));
  CHECK_THROWS_AS(BetheProblem(2, {0.1, 0.2, 0.3}, 1.0, ctx), ConfigError);
  CHECK_THROWS_AS(BetheProblem(1, {0.1, cplx(1.2, 0.3)}, 1.0, ctx), ConfigError);
  CHECK_THROWS_AS(BetheProblem(1, {cplx(0.1, 0.2), cplx(0.1, 0.2)}, 1.0, ctx), ConfigError);
  CHECK_THROWS_AS(BetheProblem(1, {0.0, cplx(0.5, 0.5)}, 1.0, ctx), ConfigError);  // on the boundary
  CHECK(all_subsets(4, 2).size() == 6);
  CHECK(complement({0, 2}, 4) == Subset{1, 3});
}

TEST_CASE("asymptotic seeds") {
  const Torus ctx(cplx(0, 1));
  const BetheProblem p(1, {cplx(0.2, 0.4), cplx(0.5, 0.4)}, 10.0 * kI, ctx);
  const auto t = seed_asymptotic(p, {0});
  CHECK(std::abs(std::abs(t[0] - p.z()[0]) - 1.0 / (20 * kPi)) < 1e-15);
  CHECK(std::abs(t[0] - p.z()[0]) < 0.15);
  CHECK_THROWS_AS(seed_asymptotic(p.with_mu(0.5 * kI), {0}), SeedTooCoarse);
  // the seed tends to the marked points
  double prev = 1.0;
  for (double s : {1e2, 1e4, 1e6}) {
    const double d = std::abs(seed_asymptotic(p.with_mu(s * kI), {1})[0] - p.z()[1]);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("degree one solve against a real-section bisection") {
  // tau = i, real z and imaginary mu: the equation is real on the real axis
  const Torus ctx(cplx(0, 1));
  const BetheProblem p(1, {0.2, 0.7}, 5.0 * kI, ctx, cplx(0, -0.5));
  const BetheSolution s = solve_subset(p, {0});
  REQUIRE(s.accepted());
  CHECK(s.residual < 1e-12);
  CHECK(!s.continuation);
  auto F = [&](double t) { return (k2PiI * p.mu() - rho(t - 0.2, ctx) - rho(t - 0.7, ctx)).real(); };
  const double lo = 0.2 - 0.1, hi = 0.2 - 1e-4;
  REQUIRE(F(lo) * F(hi) < 0);
  const auto br = boost::math::tools::bisect(F, lo, hi, [](double a, double b) { return std::abs(a - b) < 1e-15; });
  CHECK(std::abs(s.t[0] - 0.5 * (br.first + br.second)) < 1e-12);
}

TEST_CASE("Jacobian matches finite differences") {
  std::mt19937_64 rng(41);
  const Torus ctx(cplx(0.15, 0.9));
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + trial % 3;
    std::vector<cplx> t, z;
    for (int j = 0; j < m; ++j) t.push_back(random_point(rng, ctx, 0.2));
    for (int a = 0; a < 2 * m; ++a) z.push_back(random_point(rng, ctx, 0.2));
    bool regular = true;
    for (size_t i = 0; i < t.size(); ++i) {
      for (size_t j = i + 1; j < t.size(); ++j) regular = regular && ctx.distance_mod(t[i], t[j]) > 0.1;
      for (const auto& zz : z) regular = regular && ctx.distance_mod(t[i], zz) > 0.1;
    }
    if (!regular) continue;
    const cplx mu = random_complex(rng, -2, 2);
    const Eigen::MatrixXcd J = bae_jacobian(mu, t, z, ctx);
    const double h = 1e-5;
    for (int k = 0; k < m; ++k) {
      auto tp = t, tm = t;
      tp[k] += h;
      tm[k] -= h;
      const Eigen::VectorXcd col = (bae_residual(mu, tp, z, ctx) - bae_residual(mu, tm, z, ctx)) / (2 * h);
      CHECK((col - J.col(k)).norm() < 1e-6 * std::max(1.0, J.col(k).norm()));
    }
  }
}

TEST_CASE("master function derivatives") {
  std::mt19937_64 rng(43);
  const cplx tau(0.1, 1.1);
  const Torus ctx(tau);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 1 + trial % 2;
    std::vector<cplx> t, z;
    for (int j = 0; j < m; ++j) t.push_back(random_point(rng, ctx, 0.25));
    for (int a = 0; a < 2 * m; ++a) z.push_back(random_point(rng, ctx, 0.25));
    const cplx mu = random_complex(rng, -1, 1);
    const double h = 1e-5;
    for (int a = 0; a < 2 * m; ++a) {
      auto zp = z, zm = z;
      zp[a] += h;
      zm[a] -= h;
      const cplx fd = log_diff(master_phi(mu, t, zp, ctx), master_phi(mu, t, zm, ctx)) / (2 * h);
      const cplx an = master_dz(a, mu, t, z, ctx);
      CHECK(std::abs(fd - an) < 1e-7 * std::max(1.0, std::abs(an)));
    }
    const cplx fd = log_diff(master_phi(mu, t, z, Torus(tau + h)), master_phi(mu, t, z, Torus(tau - h))) / (2 * h);
    const cplx an = master_dtau(mu, t, z, ctx);
    CHECK(std::abs(fd - an) < 1e-7 * std::max(1.0, std::abs(an)));
  }
}

TEST_CASE("z-derivatives of the master function sum to zero on solutions") {
  const BetheProblem p = fixture(6.0 * kI);
  const Torus& ctx = p.torus();
  for (const auto& I : all_subsets(4, 2)) {
    const BetheSolution s = solve_subset(p, I);
    REQUIRE(s.accepted());
    cplx closed = 0.0, fd = 0.0;
    // fourth-order stencil: t sits within 0.03 of z, where the third derivative is large
    const double h = 1e-4;
    const cplx phi0 = master_phi(s.mu, s.t, p.z(), ctx);
    for (int a = 0; a < 4; ++a) {
      closed += master_dz(a, s.mu, s.t, p.z(), ctx);
      auto at = [&](double d) {
        auto z = p.z();
        z[a] += d;
        return log_diff(master_phi(s.mu, s.t, z, ctx), phi0);
      };
      fd += (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12 * h);
    }
    CHECK(std::abs(closed) < 1e-9);
    CHECK(std::abs(fd - closed) < 1e-7);
  }
}

TEST_CASE("symmetric degree one configuration") {
  const Torus ctx(cplx(0, 1));
  const double a = 0.25;
  const std::vector<cplx> z = {-a, a};
  // t = 0 solves the equations at mu = 0
  CHECK(max_abs(bae_residual(0.0, {0.0}, z, ctx)) < 1e-14);
  CHECK(std::abs(master_dz(0, 0.0, {0.0}, z, ctx) + master_dz(1, 0.0, {0.0}, z, ctx)) < 1e-13);
}

TEST_CASE("equivalence moves preserve solutions") {
  const BetheProblem p = fixture(6.0 * kI);
  const Torus& ctx = p.torus();
  for (const auto& I : all_subsets(4, 2)) {
    const BetheSolution s = solve_subset(p, I);
    REQUIRE(s.accepted());
    const Eigen::VectorXcd r0 = bae_residual(s.mu, s.t, p.z(), ctx);
    for (Move mv : {Move::t_one, Move::t_tau, Move::z_one, Move::z_tau}) {
      const int n = (mv == Move::t_one || mv == Move::t_tau) ? 2 : 4;
      for (int idx = 0; idx < n; ++idx) {
        for (int sign : {-1, 1}) {
          const MovedPoint q = apply_move(s.mu, s.t, p.z(), ctx, mv, idx, sign);
          const Eigen::VectorXcd r = bae_residual(q.mu, q.t, q.z, ctx);
          CHECK(max_abs(r) < 1e-10);
          if (mv == Move::t_one || mv == Move::t_tau) CHECK(max_abs(r - r0) < 1e-11);
        }
      }
    }
    // t shifts by a lattice vector leave the residual componentwise unchanged away from solutions too
    const std::vector<cplx> off = {s.t[0] + 0.01, s.t[1]};
    const Eigen::VectorXcd a = bae_residual(s.mu, off, p.z(), ctx);
    const MovedPoint q = apply_move(s.mu, off, p.z(), ctx, Move::t_one, 0, 1);
    CHECK(max_abs(bae_residual(q.mu, q.t, q.z, ctx) - a) < 1e-11);
    const MovedPoint w = apply_move(s.mu, off, p.z(), ctx, Move::t_tau, 0, 1);
    CHECK(max_abs(bae_residual(w.mu, w.t, w.z, ctx) - a) < 1e-11 * std::max(1.0, max_abs(a)));
  }
}

TEST_CASE("normal form") {
  const BetheProblem p = fixture(6.0 * kI);
  const Torus& ctx = p.torus();
  const BetheSolution s = solve_subset(p, {0, 2});
  REQUIRE(s.accepted());
  for (const auto& t : s.t) CHECK(p.cell().contains(t));
  const BetheSolution again = normalize(s);
  CHECK(again.t == s.t);
  CHECK(again.mu == s.mu);

  SUBCASE("moved seeds lead to the same normal solution") {
    // (mu - 2, t_1 + tau) and (mu, t_2 - 1) are equivalent to (mu, t)
    std::vector<cplx> seed = seed_asymptotic(p, {0, 2});
    seed[0] += ctx.tau();
    seed[1] -= 1.0;
    const BetheSolution moved = solve_bae(p.with_mu(p.mu() - 2.0), seed);
    REQUIRE(moved.accepted());
    CHECK(solution_distance(moved, s) < 1e-10);
  }
}

TEST_CASE("residue certificate separates solutions from non-solutions") {
  const BetheProblem p = fixture(6.0 * kI);
  for (const auto& I : all_subsets(4, 2)) {
    const BetheSolution s = solve_subset(p, I);
    REQUIRE(s.accepted());
    for (double r : residue_certificate(s)) CHECK(r < 1e-9);
    BetheSolution off = s;
    off.t[0] += 0.02;
    double worst = 0.0;
    for (double r : residue_certificate(off)) worst = std::max(worst, r);
    CHECK(worst > 1e-4);
  }
}

TEST_CASE("analytic involution") {
  SUBCASE("applying it twice gives back the normal solution") {
    for (cplx mu : {6.0 * kI, 10.0 * kI, cplx(0.3, 7.0)}) {
      const BetheProblem p = fixture(mu);
      for (const auto& I : all_subsets(4, 2)) {
        const BetheSolution s = solve_subset(p, I);
        REQUIRE(s.accepted());
        const BetheSolution u = analytic_involution(s);
        CHECK(u.accepted());
        CHECK(u.residual < 1e-10);
        for (double r : residue_certificate(u)) CHECK(r < 1e-9);
        const BetheSolution back = analytic_involution(u);
        CHECK(solution_distance(back, s) < 1e-9);
      }
    }
  }

  SUBCASE("asymptotically the image carries the complementary subset") {
    const BetheProblem p = fixture(10.0 * kI);
    for (const auto& I : all_subsets(4, 2)) {
      const BetheSolution u = analytic_involution(solve_subset(p, I));
      REQUIRE(u.subset_tag.has_value());
      CHECK(*u.subset_tag == complement(I, 4));
      // the image sits at z - 1/(2 pi i mu) to first order
      const cplx shift = -1.0 / (k2PiI * p.mu());
      for (const auto& s : u.t) {
        double best = 1.0;
        for (int i : complement(I, 4)) best = std::min(best, std::abs(s - (p.z()[i] + shift)));
        CHECK(best < 0.01);
      }
    }
  }

  SUBCASE("symmetric configuration: the image is the reflected solution at -mu") {
    const Torus ctx(cplx(0, 1));
    const double a = 0.25;
    const BetheProblem p(1, {-a, a}, 8.0 * kI, ctx, cplx(-0.5, -0.5));
    const BetheSolution t = solve_subset(p, {0});
    REQUIRE(t.accepted());
    const BetheSolution s = solve_subset(p.with_mu(-p.mu()), {1});
    REQUIRE(s.accepted());
    CHECK(std::abs(s.t[0] + t.t[0]) < 1e-12);
    const BetheSolution u = analytic_involution(t);
    CHECK(solution_distance(u, s) < 1e-9);
    REQUIRE(u.subset_tag.has_value());
    CHECK(*u.subset_tag == Subset{1});
  }

  SUBCASE("integer mu is rejected") {
    const Torus ctx(cplx(0, 1));
    const BetheProblem p(1, {-0.25, 0.25}, 0.0, ctx, cplx(-0.5, -0.5));
    BetheSolution s{p, 0.0, {0.0}, 0.0, std::nullopt, SolveStatus::converged, 0, false};
    CHECK_THROWS_AS(analytic_involution(s), InvolutionMismatch);
  }
}

TEST_CASE("first-order asymptotics of the roots") {
  // |(t_j - z_{i_j}) 2 pi i mu - 1| |mu| stays bounded: fit on two values of mu, validate on a third
  for (const auto& I : all_subsets(4, 2)) {
    std::vector<double> scaled;
    for (double m : {10.0, 20.0, 40.0}) {
      const BetheProblem p = fixture(m * kI);
      const BetheSolution s = solve_subset(p, I);
      REQUIRE(s.accepted());
      double err = 0.0;
      for (const auto& t : s.t) {
        double best = 1e9;
        for (int i : I) best = std::min(best, std::abs((t - p.z()[i]) * k2PiI * p.mu() - 1.0));
        err = std::max(err, best);
      }
      scaled.push_back(err * m);
    }
    const double C = std::max(scaled[0], scaled[1]);
    CHECK(scaled[2] <= 2.0 * C);
    CHECK(scaled[2] >= 0.5 * std::min(scaled[0], scaled[1]));
  }
}

TEST_CASE("continuation reaches below the asymptotic seed regime") {
  const Torus ctx(cplx(0, 1));
  const BetheProblem p(1, {0.2, 0.7}, 0.5 * kI, ctx, cplx(0, -0.5));
  CHECK_THROWS_AS(seed_asymptotic(p, {0}), SeedTooCoarse);
  const BetheSolution s = solve_subset(p, {0});
  REQUIRE(s.accepted());
  CHECK(s.continuation);
  for (double r : residue_certificate(s)) CHECK(r < 1e-9);

  // where both work they agree
  const BetheProblem q = p.with_mu(5.0 * kI);
  BetheOptions no_direct;
  no_direct.direct_first = false;
  const BetheSolution c = solve_subset(q, {0}, no_direct);
  const BetheSolution d = solve_subset(q, {0});
  REQUIRE(c.accepted());
  CHECK(c.continuation);
  CHECK(solution_distance(c, d) < 1e-11);
}
