#include "ebethe/wronski.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include "ebethe/errors.hpp"

namespace ebethe {

namespace {

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::string subset_str(const Subset& I) {
  std::ostringstream os;
  os << "{";
  for (size_t i = 0; i < I.size(); ++i) os << (i ? "," : "") << I[i] + 1;
  os << "}";
  return os.str();
}

double min_separation(const std::vector<cplx>& pts, const Torus& ctx) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, ctx.distance_mod(pts[i], pts[j]));
  return best;
}

double condition_number(const Eigen::MatrixXcd& J) {
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(J);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

struct Attempt {
  std::optional<FiberPoint> point;
  std::string failure;
};

Attempt attempt_subset(const BetheProblem& p, const Subset& I, const FiberOptions& opts) {
  Attempt out;
  try {
    const BetheSolution s = solve_subset(p, I, opts.bethe);
    if (!s.accepted(opts.bethe)) {
      std::ostringstream os;
      os << "Bethe solve: " << to_string(s.status) << ", residual " << s.residual;
      out.failure = os.str();
      return out;
    }
    const BetheSolution partner = analytic_involution(s, opts.bethe);
    const ThetaPoly f = bethe_f(s);
    const ThetaPoly h = bethe_h(s);
    const ThetaPoly g = solve_wronskian(f, h, p.cell());
    const auto& ctx = p.torus();

    const auto fp = std::make_shared<const ThetaPoly>(f);
    const auto gp = std::make_shared<const ThetaPoly>(g);
    const WronskianFunction wr(fp, gp);

    std::vector<cplx> pts = s.t;
    pts.insert(pts.end(), partner.t.begin(), partner.t.end());
    pts.insert(pts.end(), p.z().begin(), p.z().end());

    const cplx k = (s.mu - p.mu()) / 2.0;
    FiberPoint pt{I,
                  infer_subset(s),
                  s,
                  partner,
                  partner.subset_tag,
                  static_cast<int>(std::lround(k.real())),
                  f,
                  g,
                  proportionality_residual(wr, h, p.cell().base(), 4 * p.m() + 2),
                  min_separation(pts, ctx),
                  condition_number(bae_jacobian(s.mu, s.t, p.z(), ctx))};
    out.point = std::move(pt);
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

bool FiberPoint::certified(const FiberOptions& o) const {
  return solution.accepted(o.bethe) && wr_residual < o.wr_tol && separation > o.separation_tol &&
         jacobian_condition < o.jacobian_cond_max;
}

bool FiberReport::certified(const FiberOptions& o) const {
  if (!complete()) return false;
  return std::all_of(points.begin(), points.end(), [&](const FiberPoint& pt) { return pt.certified(o); });
}

bool FiberReport::asymptotic_labels() const {
  const int n = 2 * problem.m();
  return std::all_of(points.begin(), points.end(), [&](const FiberPoint& pt) {
    return pt.subset_tag == pt.seed_subset && pt.partner_tag == complement(pt.seed_subset, n);
  });
}

FiberReport enumerate_fiber(const BetheProblem& p, const FiberOptions& opts) {
  return enumerate_fiber(p, all_subsets(2 * p.m(), p.m()), opts);
}

FiberReport enumerate_fiber(const BetheProblem& p, const std::vector<Subset>& seeds, const FiberOptions& opts) {
  std::vector<Attempt> attempts;
  if (opts.parallel) {
    std::vector<std::future<Attempt>> futures;
    for (const Subset& I : seeds) futures.push_back(std::async(std::launch::async, attempt_subset, p, I, opts));
    for (auto& fu : futures) attempts.push_back(fu.get());
  } else {
    for (const Subset& I : seeds) attempts.push_back(attempt_subset(p, I, opts));
  }

  FiberReport r{p, {}, 0, static_cast<int>(binomial(2 * p.m(), p.m())), {}, {}, {}, 0,
                std::numeric_limits<double>::infinity()};
  // assembly in seed order keeps the report independent of completion order
  for (size_t i = 0; i < attempts.size(); ++i) {
    if (!attempts[i].point) {
      r.failures.push_back({seeds[i], attempts[i].failure});
      continue;
    }
    FiberPoint& pt = *attempts[i].point;
    bool dup = false;
    for (const auto& q : r.points) {
      if (solution_distance(q.solution, pt.solution) < opts.dedup_tol) {
        dup = true;
        break;
      }
    }
    if (dup) {
      ++r.duplicates;
      continue;
    }
    for (const auto& q : r.points) r.min_point_distance = std::min(r.min_point_distance, solution_distance(q.solution, pt.solution));
    r.points.push_back(std::move(pt));
  }
  r.count = static_cast<int>(r.points.size());

  for (const auto& pt : r.points) {
    if (!pt.certified(opts)) {
      std::ostringstream os;
      os << "point " << subset_str(pt.seed_subset) << " fails a certificate (wr residual " << pt.wr_residual
         << ", separation " << pt.separation << ", Jacobian condition " << pt.jacobian_condition << ")";
      r.warnings.push_back(os.str());
    }
    if (pt.label != 0) {
      r.warnings.push_back("point " + subset_str(pt.seed_subset) + " normalizes to label " + std::to_string(pt.label));
    }
    const Subset own = pt.subset_tag.value_or(pt.seed_subset);
    const Subset expect = complement(own, 2 * p.m());
    if (!pt.partner_tag) {
      r.warnings.push_back("regime: partner of " + subset_str(own) + " has no subset tag");
      continue;
    }
    if (*pt.partner_tag != expect) {
      r.warnings.push_back("regime: partner of " + subset_str(own) + " is tagged " + subset_str(*pt.partner_tag) +
                           ", not the complement");
    }
    std::pair<Subset, Subset> pr = std::minmax(own, *pt.partner_tag);
    if (std::find(r.pairing.begin(), r.pairing.end(), pr) == r.pairing.end()) r.pairing.push_back(pr);
  }
  return r;
}

void require_complete(const FiberReport& r) {
  if (r.complete()) return;
  std::ostringstream os;
  os << "incomplete fiber: " << r.count << " of " << r.expected << " points";
  for (const auto& f : r.failures) os << "; " << subset_str(f.subset) << ": " << f.reason;
  throw IncompleteFiber(os.str());
}

MuMinEstimate estimate_mu_min(const BetheProblem& p, const std::vector<cplx>& mu_grid, const FiberOptions& opts) {
  MuMinEstimate est;
  for (size_t i = 1; i < mu_grid.size(); ++i) {
    if (std::abs(mu_grid[i].imag()) > std::abs(mu_grid[i - 1].imag())) {
      throw std::invalid_argument("estimate_mu_min: grid must be sorted by |Im mu| descending");
    }
  }
  for (cplx mu : mu_grid) {
    const FiberReport r = enumerate_fiber(p.with_mu(mu), opts);
    const bool ok = r.certified(opts) && r.asymptotic_labels();
    est.scan.emplace_back(mu, ok);
    if (!ok) break;
    est.threshold = std::abs(mu.imag());
  }
  return est;
}

double ratio_derivative_residual(const FiberPoint& pt) {
  const auto& p = pt.solution.problem;
  const auto& ctx = p.torus();
  const ThetaPoly h = bethe_h(pt.solution);
  double worst = 0.0;
  const int n = 4 * p.m() + 2;
  for (int i = 0; i < n; ++i) {
    const cplx x = r2_point(i, p.cell().base(), ctx.tau(), 0.047);
    const auto jf = pt.f.jet(x, 1);
    const auto jg = pt.g.jet(x, 1);
    const auto jh = h.jet(x, 0);
    // F = g/f as a series; F' against h/f^2, both carried in log scale
    const Taylor F = jg.jet / jf.jet;
    const cplx log_ratio = (jg.log_scale - jf.log_scale) + std::log(F[1]) -
                           (jh.log_scale - 2.0 * jf.log_scale + std::log(jh.jet[0] / (jf.jet[0] * jf.jet[0])));
    cplx d = log_ratio - k2PiI * std::round(log_ratio.imag() / (2 * kPi));
    worst = std::max(worst, std::abs(std::exp(d) - 1.0));
  }
  (void)ctx;
  return worst;
}

int count_ratios(const FiberReport& r, double tol) {
  int n = 0;
  for (const auto& pt : r.points)
    if (pt.label == 0 && ratio_derivative_residual(pt) < tol) ++n;
  return n;
}

int count_ratios(const BetheProblem& p, const FiberOptions& opts) { return count_ratios(enumerate_fiber(p, opts)); }

double asymptotic_defect(const BetheSolution& s) {
  const auto& ctx = s.problem.torus();
  const auto& z = s.problem.z();
  double worst = 0.0;
  for (cplx t : s.t) {
    size_t best = 0;
    for (size_t a = 1; a < z.size(); ++a)
      if (ctx.distance_mod(t, z[a]) < ctx.distance_mod(t, z[best])) best = a;
    const cplx d = ctx.reduce(t - z[best]).x0;
    worst = std::max(worst, std::abs(d * k2PiI * s.mu - 1.0));
  }
  return worst;
}

ShiftedFiberCheck shifted_fiber_check(const BetheProblem& p, int k, const FiberOptions& opts) {
  const cplx mu_k = p.mu() + 2.0 * static_cast<double>(k);
  const FiberReport r = enumerate_fiber(p.with_mu(mu_k), opts);
  const auto& ctx = p.torus();
  const ThetaPoly h(1.0, -p.mu(), p.z(), ctx);
  ShiftedFiberCheck out;
  out.count = r.count;
  out.labels_ok = true;
  for (const auto& pt : r.points) {
    const auto fk = std::make_shared<const ThetaPoly>(pt.f.scale(), pt.f.mu() + static_cast<double>(k), pt.f.roots(), ctx);
    const auto gk = std::make_shared<const ThetaPoly>(pt.g.scale(), pt.g.mu() + static_cast<double>(k), pt.g.roots(), ctx);
    out.max_wr_residual = std::max(out.max_wr_residual,
                                   proportionality_residual(WronskianFunction(fk, gk), h, p.cell().base(), 4 * p.m() + 2));
    if (pt.label != 0 || std::abs(fk->mu() - static_cast<double>(k)) > 1e-9 ||
        std::abs(gk->mu() + p.mu() + static_cast<double>(k)) > 1e-6) {
      out.labels_ok = false;
    }
  }
  return out;
}

GSystemPoint g_system_m1(const BetheProblem& p, const Subset& I, int steps) {
  if (p.m() != 1) throw std::invalid_argument("g_system_m1: degree one only");
  const auto& ctx = p.torus();
  const auto& z = p.z();
  const Subset Ib = complement(I, 2);
  cplx t = z[I[0]], s = z[Ib[0]];
  const cplx v_end = 1.0 / (k2PiI * p.mu());

  const auto eval = [&](cplx v, cplx tt, cplx ss, Eigen::Vector2cd& G, Eigen::Matrix2cd& J) {
    for (int a = 0; a < 2; ++a) {
      const auto A = theta_derivs(z[a] - tt, ctx, 2);
      const auto B = theta_derivs(z[a] - ss, ctx, 2);
      G(a) = A[0] * B[0] - v * (A[0] * B[1] - A[1] * B[0]);
      J(a, 0) = -A[1] * B[0] - v * (-A[1] * B[1] + A[2] * B[0]);
      J(a, 1) = -A[0] * B[1] - v * (-A[0] * B[2] + A[1] * B[1]);
    }
  };

  Eigen::Vector2cd G;
  Eigen::Matrix2cd J;
  for (int step = 1; step <= steps; ++step) {
    const cplx v = v_end * (static_cast<double>(step) / steps);
    for (int it = 0; it < 40; ++it) {
      eval(v, t, s, G, J);
      const Eigen::Vector2cd d = J.partialPivLu().solve(G);
      t -= d(0);
      s -= d(1);
      if (d.norm() < 1e-15) break;
    }
  }
  eval(v_end, t, s, G, J);
  // G(z_a) relative to the size of its two terms
  double scale = 0.0;
  for (int a = 0; a < 2; ++a) {
    const auto A = theta_derivs(z[a] - t, ctx, 1);
    const auto B = theta_derivs(z[a] - s, ctx, 1);
    scale = std::max(scale, std::abs(A[0] * B[0]) + std::abs(v_end) * std::abs(A[0] * B[1] - A[1] * B[0]));
  }
  return {t, s, G.cwiseAbs().maxCoeff() / scale};
}

}  // namespace ebethe
