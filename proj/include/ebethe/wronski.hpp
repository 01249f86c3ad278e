#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ebethe/bethe.hpp"
#include "ebethe/thetapoly.hpp"

namespace ebethe {

struct FiberOptions {
  BetheOptions bethe;
  double dedup_tol = 1e-6;       // normal-form distance below which two points coincide
  double wr_tol = 1e-9;          // Wr(f, g) against h, relative sampling residual
  double separation_tol = 1e-6;  // t, s, z pairwise, modulo the lattice
  double jacobian_cond_max = 1e6;
  bool parallel = true;
};

struct FiberPoint {
  Subset seed_subset;               // subset whose asymptotic seed produced the point
  std::optional<Subset> subset_tag;  // nearest-z tag of t
  BetheSolution solution;           // normal form (mu', t)
  BetheSolution partner;            // analytic involution image (-mu', s)
  std::optional<Subset> partner_tag;
  int label = 0;                    // k with mu' = mu + 2k: the point lies in Wr_k^{-1}(h)
  ThetaPoly f;                      // prod theta(x - t_j)
  ThetaPoly g;                      // Wr(f, g) = h_{mu'}
  double wr_residual = 0.0;
  double separation = 0.0;          // min pairwise lattice distance among t, s, z
  double jacobian_condition = 0.0;  // of the Bethe equations at t

  bool certified(const FiberOptions& o) const;
};

struct FiberFailure {
  Subset subset;
  std::string reason;
};

struct FiberReport {
  BetheProblem problem;
  std::vector<FiberPoint> points;
  int count = 0;
  int expected = 0;  // C(2m, m)
  std::vector<std::pair<Subset, Subset>> pairing;  // seed subsets of involution partners
  std::vector<FiberFailure> failures;
  std::vector<std::string> warnings;
  int duplicates = 0;
  double min_point_distance = 0.0;  // between distinct normal forms

  bool complete() const { return failures.empty() && count == expected; }
  // complete and every point certified
  bool certified(const FiberOptions& o) const;
  // every point carries its seed tag and its partner the complementary tag
  bool asymptotic_labels() const;
};

// One Bethe solve per m-subset (concurrently), then the involution partner, certificates, dedup and pairing.
// Failures are collected in the report; see require_complete.
FiberReport enumerate_fiber(const BetheProblem& p, const FiberOptions& opts = {});
// Same, seeding from the listed subsets (repeats allowed, deduplicated by normal form).
FiberReport enumerate_fiber(const BetheProblem& p, const std::vector<Subset>& seeds, const FiberOptions& opts = {});
// throws IncompleteFiber naming the failing subsets
void require_complete(const FiberReport& r);

struct MuMinEstimate {
  std::optional<double> threshold;            // smallest |Im mu| of the leading run of passing grid points
  std::vector<std::pair<cplx, bool>> scan;   // grid point, passed
};
// mu_grid must be sorted by |Im mu| descending. A grid point passes when the fiber is certified and
// asymptotically labeled; the scan stops at the first failing grid point.
MuMinEstimate estimate_mu_min(const BetheProblem& p, const std::vector<cplx>& mu_grid, const FiberOptions& opts = {});

// max relative deviation of F' = (g/f)' from a constant multiple of h/f^2 at 4m+2 sample points
double ratio_derivative_residual(const FiberPoint& pt);
// fiber points with label 0 whose F = g/f passes the derivative check
int count_ratios(const FiberReport& r, double tol = 1e-9);
int count_ratios(const BetheProblem& p, const FiberOptions& opts = {});

// max_j |(t_j - z_{i_j}) 2 pi i mu - 1| for the tag I of the solution, t_j matched to their nearest z
double asymptotic_defect(const BetheSolution& s);

// Wr_k^{-1}(h_mu) from Wr_0^{-1}(h_{mu+2k}) through f, g -> e^{2 pi i k x} f, e^{2 pi i k x} g.
struct ShiftedFiberCheck {
  int count = 0;
  double max_wr_residual = 0.0;  // shifted pairs against h_mu
  bool labels_ok = false;        // f has label k and g label -(mu + k)
};
ShiftedFiberCheck shifted_fiber_check(const BetheProblem& p, int k, const FiberOptions& opts = {});

// m = 1 oracle: zeros of G(x) = theta(x-t) theta(x-s) - v Wr(theta(x-t), theta(x-s)) pinned to z,
// tracked from (z_I, z_Ibar) at v = 0 to v = 1/(2 pi i mu).
struct GSystemPoint {
  cplx t, s;
  double residual = 0.0;
};
GSystemPoint g_system_m1(const BetheProblem& p, const Subset& I, int steps = 64);

}  // namespace ebethe
