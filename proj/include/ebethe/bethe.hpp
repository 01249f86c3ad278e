#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ebethe/elliptic.hpp"
#include "ebethe/thetapoly.hpp"

namespace ebethe {

// sorted 0-based indices into z
using Subset = std::vector<int>;

Subset complement(const Subset& I, int n);
// all m-subsets of {0..n-1} in lexicographic order
std::vector<Subset> all_subsets(int n, int m);

class BetheProblem {
 public:
  // throws ConfigError unless z has 2m entries, pairwise distinct modulo the lattice, inside the open cell
  BetheProblem(int m, std::vector<cplx> z, cplx mu, const Torus& ctx, cplx base = 0.0);

  int m() const { return m_; }
  const std::vector<cplx>& z() const { return z_; }
  cplx mu() const { return mu_; }
  const Torus& torus() const { return ctx_; }
  const FundamentalParallelogram& cell() const { return cell_; }
  BetheProblem with_mu(cplx mu) const;
  double min_z_separation() const;

 private:
  int m_;
  std::vector<cplx> z_;
  cplx mu_;
  Torus ctx_;
  FundamentalParallelogram cell_;
};

// Master function and its derivatives, for unit weights at the points z.
cplx master_phi(cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx);
cplx master_dz(int a, cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx);
cplx master_dtau(cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx);

// 2 pi i mu + 2 sum_{k != j} rho(t_j - t_k) - sum_s rho(t_j - z_s), j = 1..m
Eigen::VectorXcd bae_residual(cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx);
Eigen::MatrixXcd bae_jacobian(cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx);

// t_j = z_{i_j} + 1/(2 pi i mu); throws SeedTooCoarse if the shift exceeds half the z-separation
std::vector<cplx> seed_asymptotic(const BetheProblem& p, const Subset& I);

enum class SolveStatus { converged, no_convergence, coalesced_roots };
const char* to_string(SolveStatus s);

struct BetheOptions {
  double residual_tol = 1e-12;  // Newton target
  double accept_tol = 1e-10;    // below this the solution is accepted
  int max_iter = 50;
  double armijo_factor = 0.5;
  int max_backtracks = 20;
  double coalesce_tol = 1e-8;  // relative to the cell diagonal
  double mu_integer_tol = 1e-8;
  double involution_tol = 1e-8;
  int max_halvings = 30;  // continuation step halvings per step
  bool allow_continuation = true;
  bool direct_first = true;  // try Newton from the asymptotic seed before continuing
};

struct BetheSolution {
  BetheProblem problem;
  cplx mu;  // of this representative; equivalence moves change it
  std::vector<cplx> t;
  double residual = 0.0;
  std::optional<Subset> subset_tag;
  SolveStatus status = SolveStatus::no_convergence;
  int iterations = 0;
  bool continuation = false;

  bool accepted(const BetheOptions& o = {}) const {
    return status == SolveStatus::converged && residual < o.accept_tol;
  }
};

// Damped Newton from `seed` at the problem's mu, then normalization into the cell.
// Failures are reported through status, never thrown.
BetheSolution solve_bae(const BetheProblem& p, const std::vector<cplx>& seed, const BetheOptions& opts = {},
                        std::optional<Subset> tag = std::nullopt);
// Asymptotic seed for subset I, Newton, and on failure continuation in v = 1/(2 pi i mu) from near v = 0.
BetheSolution solve_subset(const BetheProblem& p, const Subset& I, const BetheOptions& opts = {});

// Equivalence moves: t_j + sign, (mu - 2 sign, t_j + sign tau), z_k + sign, (mu + sign, z_k + sign tau).
enum class Move { t_one, t_tau, z_one, z_tau };
struct MovedPoint {
  cplx mu;
  std::vector<cplx> t, z;
};
MovedPoint apply_move(cplx mu, std::vector<cplx> t, std::vector<cplx> z, const Torus& ctx, Move mv, int index,
                      int sign);

// All t moved into the cell with the matching mu shifts; residual recomputed.
BetheSolution normalize(BetheSolution s);

// max(|mu - mu'|, min over matchings of the max lattice-reduced distance between t and t')
double solution_distance(const BetheSolution& a, const BetheSolution& b);

// The subset of z that the t_j sit next to, if every t_j has a distinct nearest z.
std::optional<Subset> infer_subset(const BetheSolution& s);

// f = prod theta(x - t_j) and h = e^{-2 pi i mu x} prod theta(x - z_a)
ThetaPoly bethe_f(const BetheSolution& s);
ThetaPoly bethe_h(const BetheSolution& s);
// relative residues of h/f^2 at the t_j
std::vector<double> residue_certificate(const BetheSolution& s);

// (mu, t) -> (-mu, s) through Wr(f, g) = h, normalized; throws InvolutionMismatch if s fails the equations.
BetheSolution analytic_involution(const BetheSolution& s, const BetheOptions& opts = {});

}  // namespace ebethe
