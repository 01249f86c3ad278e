#include "ebethe/bethe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ebethe/errors.hpp"

namespace ebethe {

Subset complement(const Subset& I, int n) {
  Subset out;
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(I.begin(), I.end(), i)) out.push_back(i);
  return out;
}

std::vector<Subset> all_subsets(int n, int m) {
  std::vector<Subset> out;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + m, true);
  do {
    Subset s;
    for (int i = 0; i < n; ++i)
      if (pick[i]) s.push_back(i);
    out.push_back(s);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

BetheProblem::BetheProblem(int m, std::vector<cplx> z, cplx mu, const Torus& ctx, cplx base)
    : m_(m), z_(std::move(z)), mu_(mu), ctx_(ctx), cell_(base, ctx) {
  if (m_ < 1) throw ConfigError("m must be positive");
  if (static_cast<int>(z_.size()) != 2 * m_) {
    std::ostringstream os;
    os << "expected 2m = " << 2 * m_ << " marked points, got " << z_.size();
    throw ConfigError(os.str());
  }
  for (size_t a = 0; a < z_.size(); ++a) {
    if (!cell_.contains_open(z_[a])) {
      std::ostringstream os;
      os << "z[" << a << "] = " << z_[a] << " is not inside the open fundamental parallelogram at base " << base;
      throw ConfigError(os.str());
    }
  }
  if (min_z_separation() <= 1e-6) throw ConfigError("marked points z must be pairwise distinct modulo the lattice");
}

BetheProblem BetheProblem::with_mu(cplx mu) const {
  BetheProblem p = *this;
  p.mu_ = mu;
  return p;
}

double BetheProblem::min_z_separation() const {
  double d = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < z_.size(); ++a)
    for (size_t b = a + 1; b < z_.size(); ++b) d = std::min(d, ctx_.distance_mod(z_[a], z_[b]));
  return d;
}

cplx master_phi(cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx) {
  const cplx tau = ctx.tau();
  cplx st = 0.0, sz = 0.0;
  for (const auto& x : t) st += x;
  for (const auto& x : z) sz += x;
  cplx phi = kI * kPi / 2.0 * mu * mu * tau + k2PiI * mu * (st - 0.5 * sz);
  for (size_t i = 0; i < t.size(); ++i)
    for (size_t j = i + 1; j < t.size(); ++j) phi += 2.0 * std::log(theta(t[i] - t[j], ctx));
  for (const auto& ti : t)
    for (const auto& zs : z) phi -= std::log(theta(ti - zs, ctx));
  for (size_t s = 0; s < z.size(); ++s)
    for (size_t r = s + 1; r < z.size(); ++r) phi += 0.5 * std::log(theta(z[s] - z[r], ctx));
  return phi;
}

cplx master_dz(int a, cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx) {
  cplx d = -kI * kPi * mu;
  for (const auto& ti : t) d -= rho(z[a] - ti, ctx);
  for (size_t r = 0; r < z.size(); ++r)
    if (static_cast<int>(r) != a) d += 0.5 * rho(z[a] - z[r], ctx);
  return d;
}

cplx master_dtau(cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx) {
  // 4 pi i d/dtau ln theta(x) = eta(x) - eta(0)
  const cplx e0 = eta0(ctx);
  cplx s = 0.0;
  for (size_t i = 0; i < t.size(); ++i)
    for (size_t j = i + 1; j < t.size(); ++j) s += 2.0 * (eta(t[i] - t[j], ctx) - e0);
  for (const auto& ti : t)
    for (const auto& zs : z) s -= eta(ti - zs, ctx) - e0;
  for (size_t a = 0; a < z.size(); ++a)
    for (size_t b = a + 1; b < z.size(); ++b) s += 0.5 * (eta(z[a] - z[b], ctx) - e0);
  return kI * kPi / 2.0 * mu * mu + s / (4.0 * kI * kPi);
}

Eigen::VectorXcd bae_residual(cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx) {
  const int m = static_cast<int>(t.size());
  Eigen::VectorXcd r(m);
  for (int j = 0; j < m; ++j) {
    cplx v = k2PiI * mu;
    for (int k = 0; k < m; ++k)
      if (k != j) v += 2.0 * rho(t[j] - t[k], ctx);
    for (const auto& zs : z) v -= rho(t[j] - zs, ctx);
    r[j] = v;
  }
  return r;
}

Eigen::MatrixXcd bae_jacobian(cplx, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx) {
  const int m = static_cast<int>(t.size());
  Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      if (k == j) continue;
      const cplx d = 2.0 * rho_prime(t[j] - t[k], ctx);
      J(j, j) += d;
      J(j, k) -= d;
    }
    for (const auto& zs : z) J(j, j) -= rho_prime(t[j] - zs, ctx);
  }
  return J;
}

std::vector<cplx> seed_asymptotic(const BetheProblem& p, const Subset& I) {
  if (static_cast<int>(I.size()) != p.m()) throw std::invalid_argument("seed_asymptotic: subset size must be m");
  const cplx shift = 1.0 / (k2PiI * p.mu());
  const double half = 0.5 * p.min_z_separation();
  if (!(std::abs(shift) < half)) {
    std::ostringstream os;
    os << "asymptotic shift |1/(2 pi i mu)| = " << std::abs(shift) << " exceeds half the z-separation " << half;
    throw SeedTooCoarse(os.str());
  }
  std::vector<cplx> t;
  for (int i : I) t.push_back(p.z().at(i) + shift);
  return t;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::no_convergence: return "no_convergence";
    case SolveStatus::coalesced_roots: return "coalesced_roots";
  }
  return "unknown";
}

namespace {

struct NewtonResult {
  std::vector<cplx> t;
  double residual;
  int iterations;
  SolveStatus status;
};

bool coalesced(const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx, double tol) {
  const double d = tol * ctx.diagonal();
  for (size_t j = 0; j < t.size(); ++j) {
    for (size_t k = j + 1; k < t.size(); ++k)
      if (ctx.distance_mod(t[j], t[k]) < d) return true;
    for (const auto& zs : z)
      if (ctx.distance_mod(t[j], zs) < d) return true;
  }
  return false;
}

// residual norm, or +inf at a singular point
double residual_norm(cplx mu, const std::vector<cplx>& t, const std::vector<cplx>& z, const Torus& ctx,
                     Eigen::VectorXcd* r = nullptr) {
  try {
    Eigen::VectorXcd v = bae_residual(mu, t, z, ctx);
    const double n = v.cwiseAbs().maxCoeff();
    if (r) *r = std::move(v);
    return std::isfinite(n) ? n : std::numeric_limits<double>::infinity();
  } catch (const PoleError&) {
    return std::numeric_limits<double>::infinity();
  }
}

NewtonResult newton(cplx mu, std::vector<cplx> t, const std::vector<cplx>& z, const Torus& ctx,
                    const BetheOptions& o) {
  Eigen::VectorXcd r;
  double res = residual_norm(mu, t, z, ctx, &r);
  if (!std::isfinite(res)) return {t, res, 0, SolveStatus::coalesced_roots};
  const int m = static_cast<int>(t.size());
  int it = 0;
  for (; it < o.max_iter && res >= o.residual_tol; ++it) {
    const Eigen::MatrixXcd J = bae_jacobian(mu, t, z, ctx);
    const Eigen::VectorXcd step = J.fullPivLu().solve(-r);
    if (!step.allFinite()) break;
    // Armijo backtracking on |r|^2
    const double f0 = r.squaredNorm();
    double alpha = 1.0;
    bool moved = false;
    for (int b = 0; b <= o.max_backtracks; ++b, alpha *= o.armijo_factor) {
      std::vector<cplx> trial = t;
      for (int j = 0; j < m; ++j) trial[j] += alpha * step[j];
      Eigen::VectorXcd rt;
      const double nt = residual_norm(mu, trial, z, ctx, &rt);
      if (std::isfinite(nt) && rt.squaredNorm() <= (1.0 - 2e-4 * alpha) * f0) {
        t = std::move(trial);
        r = std::move(rt);
        res = nt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    if (coalesced(t, z, ctx, o.coalesce_tol)) return {t, res, it + 1, SolveStatus::coalesced_roots};
    if (step.cwiseAbs().maxCoeff() * alpha < 1e-15 * ctx.diagonal()) {
      ++it;
      break;
    }
  }
  const SolveStatus st = res < o.accept_tol ? SolveStatus::converged : SolveStatus::no_convergence;
  return {t, res, it, st};
}

BetheSolution make_solution(const BetheProblem& p, cplx mu, const NewtonResult& nr, std::optional<Subset> tag) {
  BetheSolution s{p, mu, nr.t, nr.residual, std::move(tag), nr.status, nr.iterations, false};
  if (s.status == SolveStatus::converged && coalesced(s.t, p.z(), p.torus(), BetheOptions{}.coalesce_tol)) {
    s.status = SolveStatus::coalesced_roots;
  }
  return s;
}

constexpr int kMaxContinuationSteps = 20000;

// follow the solution from v = 1/(2 pi i mu) near 0 out to the target along the ray
BetheSolution continuation(const BetheProblem& p, const Subset& I, const BetheOptions& o) {
  const cplx v = 1.0 / (k2PiI * p.mu());
  const double sep = p.min_z_separation();
  double s = std::min(1.0, 1e-2 * sep / std::abs(v));
  std::vector<cplx> zI;
  for (int i : I) zI.push_back(p.z()[i]);
  std::vector<cplx> t(zI.size());
  for (size_t j = 0; j < t.size(); ++j) t[j] = zI[j] + s * v;

  // t_j - z sits at distance ~1/|mu'|, so the roundoff floor of the equations grows like |mu'|^2;
  // intermediate points get tolerances scaled by |mu'/mu|^2
  const auto scaled = [&o](double at) {
    BetheOptions so = o;
    so.residual_tol /= at * at;
    so.accept_tol /= at * at;
    return so;
  };
  NewtonResult cur = newton(p.mu() / s, t, p.z(), p.torus(), scaled(s));
  int total = cur.iterations;
  if (cur.status != SolveStatus::converged) {
    cur.iterations = total;
    return make_solution(p, p.mu(), cur, I);
  }
  double ds = s;
  int halvings = 0;
  int steps = 0;
  while (s < 1.0) {
    ++steps;
    const double next = std::min(1.0, s + ds);
    // first-order predictor: dt/ds is close to v in the asymptotic regime, and exact at s = 0
    std::vector<cplx> pred = cur.t;
    NewtonResult nr = newton(p.mu() / next, pred, p.z(), p.torus(), scaled(next));
    total += nr.iterations;
    double jump = 0.0;
    for (size_t j = 0; j < pred.size(); ++j) jump = std::max(jump, std::abs(nr.t[j] - pred[j]));
    if (nr.status == SolveStatus::converged && jump < 0.25 * sep) {
      cur = nr;
      s = next;
      ds *= 1.5;
      halvings = 0;
    } else {
      ds *= 0.5;
      if (++halvings > o.max_halvings || ds < 1e-9 || steps > kMaxContinuationSteps) {
        nr.iterations = total;
        nr.status = SolveStatus::no_convergence;
        return make_solution(p, p.mu(), nr, I);
      }
    }
  }
  cur.iterations = total;
  BetheSolution sol = make_solution(p, p.mu(), cur, I);
  sol.continuation = true;
  return sol;
}

}  // namespace

BetheSolution solve_bae(const BetheProblem& p, const std::vector<cplx>& seed, const BetheOptions& opts,
                        std::optional<Subset> tag) {
  if (static_cast<int>(seed.size()) != p.m()) throw std::invalid_argument("solve_bae: seed must have m entries");
  const NewtonResult nr = newton(p.mu(), seed, p.z(), p.torus(), opts);
  return normalize(make_solution(p, p.mu(), nr, std::move(tag)));
}

BetheSolution solve_subset(const BetheProblem& p, const Subset& I, const BetheOptions& opts) {
  std::optional<BetheSolution> direct;
  if (opts.direct_first) {
    try {
      direct = solve_bae(p, seed_asymptotic(p, I), opts, I);
      if (direct->accepted(opts) && infer_subset(*direct) == I) return *direct;
    } catch (const SeedTooCoarse&) {
      if (!opts.allow_continuation) throw;
    }
  }
  if (!opts.allow_continuation) {
    if (!direct) throw std::invalid_argument("solve_subset: neither direct solve nor continuation enabled");
    return *direct;
  }
  BetheSolution c = normalize(continuation(p, I, opts));
  if (c.accepted(opts) || !direct) return c;
  return *direct;
}

MovedPoint apply_move(cplx mu, std::vector<cplx> t, std::vector<cplx> z, const Torus& ctx, Move mv, int index,
                      int sign) {
  const double sg = sign;
  switch (mv) {
    case Move::t_one: t.at(index) += sg; break;
    case Move::t_tau:
      t.at(index) += sg * ctx.tau();
      mu -= 2.0 * sg;
      break;
    case Move::z_one: z.at(index) += sg; break;
    case Move::z_tau:
      z.at(index) += sg * ctx.tau();
      mu += sg;
      break;
  }
  return {mu, std::move(t), std::move(z)};
}

BetheSolution normalize(BetheSolution s) {
  const auto& cell = s.problem.cell();
  for (auto& t : s.t) {
    LatticePoint sh;
    t = cell.reduce(t, &sh);
    // removing l tau from t_j raises mu by 2l
    s.mu += 2.0 * static_cast<double>(sh.l);
  }
  const double r = residual_norm(s.mu, s.t, s.problem.z(), s.problem.torus());
  if (std::isfinite(r)) s.residual = r;
  return s;
}

double solution_distance(const BetheSolution& a, const BetheSolution& b) {
  const Torus& ctx = a.problem.torus();
  const size_t m = a.t.size();
  if (b.t.size() != m) return std::numeric_limits<double>::infinity();
  std::vector<size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double d = 0.0;
    for (size_t j = 0; j < m; ++j) d = std::max(d, ctx.distance_mod(a.t[j], b.t[perm[j]]));
    best = std::min(best, d);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::max(best, std::abs(a.mu - b.mu));
}

std::optional<Subset> infer_subset(const BetheSolution& s) {
  const Torus& ctx = s.problem.torus();
  const auto& z = s.problem.z();
  Subset out;
  for (const auto& t : s.t) {
    int best = 0;
    for (size_t a = 1; a < z.size(); ++a)
      if (ctx.distance_mod(t, z[a]) < ctx.distance_mod(t, z[best])) best = static_cast<int>(a);
    out.push_back(best);
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) return std::nullopt;
  return out;
}

ThetaPoly bethe_f(const BetheSolution& s) { return ThetaPoly(1.0, 0.0, s.t, s.problem.torus()); }

ThetaPoly bethe_h(const BetheSolution& s) { return ThetaPoly(1.0, -s.mu, s.problem.z(), s.problem.torus()); }

std::vector<double> residue_certificate(const BetheSolution& s) { return residues_relative(bethe_h(s), bethe_f(s)); }

BetheSolution analytic_involution(const BetheSolution& s, const BetheOptions& opts) {
  if (std::abs(s.mu - std::round(s.mu.real())) < opts.mu_integer_tol) {
    throw InvolutionMismatch("analytic involution needs a non-integral mu");
  }
  const BetheProblem& p = s.problem;
  const ThetaPoly f = bethe_f(s);
  const ThetaPoly h = bethe_h(s);
  const ThetaPoly g = solve_wronskian(f, h, p.cell());

  // g = c e^{2 pi i (-mu + n) x} prod theta(x - s_j) is equivalent to (-mu + 2n, s)
  const cplx shift = g.mu() + s.mu;
  const double n = std::round(shift.real());
  if (std::abs(shift - n) > 1e-6) {
    std::ostringstream os;
    os << "analytic involution: label of g is not -mu + integer (offset " << shift << ")";
    throw InvolutionMismatch(os.str());
  }
  const cplx mu2 = -s.mu + 2.0 * n;
  const double raw = residual_norm(mu2, g.roots(), p.z(), p.torus());
  if (!(raw < opts.involution_tol)) {
    std::ostringstream os;
    os << "analytic involution: image fails the Bethe equations (residual " << raw << ")";
    throw InvolutionMismatch(os.str());
  }
  // polish the extracted roots on the equations themselves
  const NewtonResult nr = newton(mu2, g.roots(), p.z(), p.torus(), opts);
  double moved = 0.0;
  for (size_t j = 0; j < nr.t.size(); ++j) moved = std::max(moved, std::abs(nr.t[j] - g.roots()[j]));
  if (nr.status != SolveStatus::converged || moved > 1e-6) {
    throw InvolutionMismatch("analytic involution: polishing the image moved away from the Wronskian roots");
  }
  BetheSolution out = make_solution(p.with_mu(-s.mu), mu2, nr, std::nullopt);
  out = normalize(out);
  out.subset_tag = infer_subset(out);
  return out;
}

}  // namespace ebethe
