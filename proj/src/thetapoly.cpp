#include "ebethe/thetapoly.hpp"

#include "ebethe/errors.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <sstream>

namespace ebethe {

namespace {

constexpr double kR2a = 0.7548776662466927;
constexpr double kR2b = 0.5698402909980532;

}  // namespace

cplx r2_point(int i, cplx base, cplx tau, double shift) {
  const double a = std::fmod(0.5 + shift + i * kR2a, 1.0);
  const double b = std::fmod(0.5 + shift + i * kR2b, 1.0);
  return base + a + b * tau;
}

double proportionality_residual(const ThetaLike& a, const ThetaLike& b, cplx base, int samples) {
  const cplx tau = a.torus().tau();
  cplx ref = 0.0;
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const cplx x = r2_point(i, base, tau, 0.031);
    const auto ja = a.jet(x, 0), jb = b.jet(x, 0);
    if (ja.jet[0] == 0.0 || jb.jet[0] == 0.0) return std::numeric_limits<double>::infinity();
    cplx d = ja.log_scale - jb.log_scale + std::log(ja.jet[0] / jb.jet[0]);
    if (i == 0) {
      ref = d;
      continue;
    }
    d -= ref;
    d -= k2PiI * std::round(d.imag() / (2 * kPi));
    worst = std::max(worst, std::abs(std::exp(d) - 1.0));
  }
  return worst;
}

namespace {

// keep the mantissa of a scaled jet of order one
void renormalize(ScaledJet& s) {
  double big = 0.0;
  for (int k = 0; k <= s.jet.order(); ++k) big = std::max(big, std::abs(s.jet[k]));
  if (big > 0.0 && std::isfinite(big)) {
    s.log_scale += std::log(big);
    s.jet /= big;
  }
}

double min_root_separation(const std::vector<cplx>& t, const Torus& ctx) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < t.size(); ++i)
    for (size_t j = i + 1; j < t.size(); ++j) best = std::min(best, ctx.distance_mod(t[i], t[j]));
  return best;
}

// a - b with both given as exp(log_scale) * mantissa, scaled to the larger of the two
void aligned(const ScaledJet& x, const ScaledJet& y, cplx& a, cplx& b) {
  const double l = std::max(x.log_scale.real(), y.log_scale.real());
  a = std::exp(x.log_scale - l) * x.jet[0];
  b = std::exp(y.log_scale - l) * y.jet[0];
}

}  // namespace

void FundamentalParallelogram::coords(cplx x, double& a, double& b) const {
  const cplx d = x - base_;
  b = d.imag() / tau_.imag();
  a = (d - b * tau_).real();
}

bool FundamentalParallelogram::contains(cplx x) const {
  double a, b;
  coords(x, a, b);
  return a >= 0.0 && a < 1.0 && b >= 0.0 && b < 1.0;
}

bool FundamentalParallelogram::contains_open(cplx x, double margin) const {
  double a, b;
  coords(x, a, b);
  return a > margin && a < 1.0 - margin && b > margin && b < 1.0 - margin;
}

cplx FundamentalParallelogram::reduce(cplx x, LatticePoint* shift) const {
  double a, b;
  coords(x, a, b);
  const double l = std::floor(b);
  const double k = std::floor(a);
  if (shift) *shift = {static_cast<long long>(k), static_cast<long long>(l)};
  return x - k - l * tau_;
}

LogJet ThetaLike::log_jet(cplx x) const {
  const ScaledJet j = jet(x, 1);
  return {j.log_scale + std::log(j.jet[0]), j.jet[1] / j.jet[0]};
}

ThetaPoly::ThetaPoly(cplx scale, cplx mu, std::vector<cplx> roots, const Torus& ctx)
    : scale_(scale), mu_(mu), roots_(std::move(roots)), ctx_(ctx) {
  if (scale_ == 0.0) throw std::invalid_argument("ThetaPoly: scale must be nonzero");
}

Multipliers ThetaPoly::multipliers() const {
  cplx sum = 0.0;
  for (const auto& t : roots_) sum += t;
  return {k2PiI * mu_, k2PiI * mu_ * ctx_.tau() + k2PiI * sum};
}

ScaledJet ThetaPoly::jet(cplx x, int order) const {
  ScaledJet out;
  out.log_scale = std::log(scale_) + k2PiI * mu_ * x;
  Taylor e(order, 1.0);
  for (int k = 1; k <= order; ++k) e[k] = e[k - 1] * k2PiI * mu_ / static_cast<double>(k);
  out.jet = e;
  for (const auto& t : roots_) {
    const ScaledJet tj = theta_jet(x - t, ctx_, order);
    out.log_scale += tj.log_scale;
    out.jet *= tj.jet;
    renormalize(out);
  }
  return out;
}

cplx ThetaPoly::log_derivative(cplx x) const {
  cplx s = k2PiI * mu_;
  for (const auto& t : roots_) s += rho(x - t, ctx_);
  return s;
}

cplx eval(const ThetaPoly& p, cplx x) { return p.jet(x, 0).value(); }

CanonicalForm canonical_coords(const ThetaPoly& p, const FundamentalParallelogram& cell) {
  const cplx tau = p.torus().tau();
  std::vector<cplx> roots;
  roots.reserve(p.roots().size());
  cplx mu = p.mu();
  cplx log_factor = 0.0;
  long long parity = 0;
  for (const auto& t : p.roots()) {
    LatticePoint s;
    const cplx r = cell.reduce(t, &s);
    const double l = static_cast<double>(s.l);
    // theta(x - r - k - l tau) = (-1)^{k+l} e^{-pi i l^2 tau + 2 pi i l (x - r)} theta(x - r)
    mu += l;
    log_factor += -kI * kPi * l * l * tau - k2PiI * l * r;
    parity += s.k + s.l;
    roots.push_back(r);
  }
  cplx scale = p.scale() * std::exp(log_factor);
  if (parity % 2) scale = -scale;
  return {ThetaPoly(scale, mu, std::move(roots), p.torus()), mu};
}

bool same_function(const ThetaLike& f, const ThetaLike& g, double rel_tol) {
  if (f.degree() != g.degree()) return false;
  const cplx tau = f.torus().tau();
  const int n = 4 * f.degree() + 1;
  for (int i = 1; i <= n; ++i) {
    const cplx x = r2_point(i, cplx(-0.0137, -0.0071), tau, 0.01);
    cplx a, b;
    aligned(f.jet(x, 0), g.jet(x, 0), a, b);
    if (std::abs(a - b) > rel_tol * std::max(std::abs(a), std::abs(b))) return false;
  }
  return true;
}

ScaledJet wronskian_jet(const ThetaLike& f, const ThetaLike& g, cplx x, int order) {
  const ScaledJet F = f.jet(x, order + 1);
  const ScaledJet G = g.jet(x, order + 1);
  ScaledJet out;
  out.log_scale = F.log_scale + G.log_scale;
  out.jet = F.jet.truncated(order) * G.jet.derivative() - F.jet.derivative() * G.jet.truncated(order);
  return out;
}

cplx wronskian(const ThetaLike& f, const ThetaLike& g, cplx x) { return wronskian_jet(f, g, x, 0).value(); }

cplx wronskian(const ThetaPoly& f, const ThetaPoly& g, cplx x) {
  const Torus& ctx = f.torus();
  const double tol = 1e-6 * ctx.diagonal();
  auto near_root = [&](const ThetaPoly& p) {
    for (const auto& t : p.roots())
      if (ctx.distance_mod(x, t) < tol) return true;
    return false;
  };
  if (near_root(f) || near_root(g)) return wronskian_jet(f, g, x, 0).value();
  const ScaledJet F = f.jet(x, 0);
  const ScaledJet G = g.jet(x, 0);
  return std::exp(F.log_scale + G.log_scale) * F.jet[0] * G.jet[0] * (g.log_derivative(x) - f.log_derivative(x));
}

Multipliers WronskianFunction::multipliers() const {
  const Multipliers a = f_->multipliers(), b = g_->multipliers();
  return {a.log_a + b.log_a, a.log_b + b.log_b};
}

ThetaSpace::ThetaSpace(int m, Multipliers mult, const Torus& ctx) : m_(m), mult_(mult), ctx_(ctx) {
  if (m < 1) throw std::invalid_argument("ThetaSpace: degree must be positive");
  // e^{2 pi i nu} = A (-1)^m
  nu_ = mult.log_a / k2PiI + 0.5 * m;
  log_c_ = k2PiI * nu_ * ctx.tau() - mult.log_b + kI * kPi * static_cast<double>(m);
}

ScaledJet ThetaSpace::basis_jet(int r, cplx x, int order) const {
  // a_{r + j m} = C^j q^{j r + m j^2 / 2}
  const cplx tau = ctx_.tau();
  const double it = tau.imag();
  const double m = m_;
  const double jstar = (log_c_.real() - 2 * kPi * it * r - 2 * kPi * m * x.imag()) / (2 * kPi * it * m);
  const int half = static_cast<int>(std::ceil(std::sqrt(50.0 / (kPi * it * m)))) + 2;
  const int j0 = static_cast<int>(std::floor(jstar)) - half;
  const int j1 = static_cast<int>(std::ceil(jstar)) + half;
  std::vector<cplx> ex;
  ex.reserve(j1 - j0 + 1);
  cplx best = -std::numeric_limits<double>::infinity();
  for (int j = j0; j <= j1; ++j) {
    const double jd = j;
    const cplx e = jd * log_c_ + k2PiI * tau * (jd * r + 0.5 * m * jd * jd) + k2PiI * (nu_ + static_cast<double>(r) + jd * m) * x;
    ex.push_back(e);
    if (e.real() > best.real()) best = e;
  }
  ScaledJet out;
  out.log_scale = best;
  out.jet = Taylor(order);
  for (int j = j0; j <= j1; ++j) {
    const cplx w = std::exp(ex[j - j0] - best);
    const cplx freq = k2PiI * (nu_ + static_cast<double>(r) + static_cast<double>(j) * m);
    cplx p = w;
    for (int k = 0; k <= order; ++k) {
      out.jet[k] += p;
      p *= freq / static_cast<double>(k + 1);
    }
  }
  return out;
}

ThetaFunction::ThetaFunction(std::shared_ptr<const ThetaSpace> space, Eigen::VectorXcd coeffs)
    : space_(std::move(space)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != space_->dim()) throw std::invalid_argument("ThetaFunction: coefficient count mismatch");
}

ScaledJet ThetaFunction::jet(cplx x, int order) const {
  std::vector<ScaledJet> parts;
  std::vector<cplx> logs;
  double best = -std::numeric_limits<double>::infinity();
  cplx best_log = 0.0;
  for (int r = 1; r <= space_->dim(); ++r) {
    const cplx c = coeffs_[r - 1];
    if (c == 0.0) continue;
    parts.push_back(space_->basis_jet(r, x, order));
    const cplx l = parts.back().log_scale + std::log(c);
    logs.push_back(l);
    if (l.real() > best) {
      best = l.real();
      best_log = l;
    }
  }
  ScaledJet out;
  out.jet = Taylor(order);
  if (parts.empty()) {
    out.log_scale = 0.0;
    return out;
  }
  out.log_scale = best_log;
  for (size_t i = 0; i < parts.size(); ++i) out.jet += parts[i].jet * std::exp(logs[i] - best_log);
  return out;
}

std::vector<ThetaFunction> fourier_basis(int m, Multipliers mult, const Torus& ctx) {
  auto space = std::make_shared<const ThetaSpace>(m, mult, ctx);
  std::vector<ThetaFunction> out;
  for (int r = 0; r < m; ++r) out.emplace_back(space, Eigen::VectorXcd::Unit(m, r));
  return out;
}

std::vector<ThetaFunction> fourier_basis(int m, cplx A, cplx B, const Torus& ctx) {
  if (A == 0.0 || B == 0.0) throw std::invalid_argument("fourier_basis: multipliers must be nonzero");
  return fourier_basis(m, Multipliers{std::log(A), std::log(B)}, ctx);
}

ThetaPoly to_theta_poly(const ThetaLike& g, const FundamentalParallelogram& cell, const RootFinderOptions& opts) {
  const Torus& ctx = g.torus();
  const int m = g.degree();
  auto roots = find_periodic_roots([&](cplx x) { return g.log_jet(x); }, cell.cell(), m, opts);
  cplx sum = 0.0;
  for (const auto& s : roots) sum += s;

  // e^{2 pi i mu} = A and e^{2 pi i mu tau + 2 pi i sum} = B fix mu exactly
  const Multipliers mult = g.multipliers();
  const cplx mu0 = mult.log_a / k2PiI;
  const cplx tau = ctx.tau();
  const cplx w = mult.log_b / k2PiI - sum - mu0 * tau;
  const double n = std::round(w.imag() / tau.imag());
  const cplx rest = w - n * tau;
  if (std::abs(rest.imag()) > 1e-6 || std::abs(rest.real() - std::round(rest.real())) > 1e-6) {
    std::ostringstream os;
    os << "to_theta_poly: roots inconsistent with the second multiplier (defect " << std::abs(rest.imag()) << ")";
    throw RootCountError(os.str());
  }
  const cplx mu = mu0 + n;

  // scale from the sample point farthest from the roots
  const ThetaPoly unit(1.0, mu, roots, ctx);
  cplx xbest = 0.0;
  double dbest = -1.0;
  for (int i = 1; i <= 4 * m + 1; ++i) {
    const cplx x = r2_point(i, cell.base(), tau);
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : roots) d = std::min(d, ctx.distance_mod(x, s));
    if (d > dbest) {
      dbest = d;
      xbest = x;
    }
  }
  const ScaledJet gv = g.jet(xbest, 0);
  const ScaledJet uv = unit.jet(xbest, 0);
  const cplx scale = std::exp(gv.log_scale - uv.log_scale) * gv.jet[0] / uv.jet[0];
  return ThetaPoly(scale, mu, std::move(roots), ctx);
}

std::vector<double> residues_relative(const ThetaLike& h, const ThetaPoly& f) {
  const Torus& ctx = f.torus();
  const auto& t = f.roots();
  constexpr int kNodes = 64;
  std::vector<double> out;
  for (size_t j = 0; j < t.size(); ++j) {
    double sep = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < t.size(); ++k)
      if (k != j) sep = std::min(sep, ctx.distance_mod(t[j], t[k]));
    const double r = std::min(1e-2, 0.5 * sep);
    std::vector<cplx> logg(kNodes);
    for (int k = 0; k < kNodes; ++k) {
      const cplx x = t[j] + r * std::exp(k2PiI * (k + 0.5) / static_cast<double>(kNodes));
      const ScaledJet hv = h.jet(x, 0);
      const ScaledJet fv = f.jet(x, 0);
      logg[k] = hv.log_scale + std::log(hv.jet[0]) - 2.0 * (fv.log_scale + std::log(fv.jet[0]));
    }
    double ref = logg[0].real();
    for (const auto& l : logg) ref = std::max(ref, l.real());
    cplx num = 0.0;
    double den = 0.0;
    for (int k = 0; k < kNodes; ++k) {
      const cplx g = std::exp(logg[k] - ref);
      num += g * std::exp(k2PiI * (k + 0.5) / static_cast<double>(kNodes));
      den += std::abs(g);
    }
    out.push_back(std::abs(num) / den);
  }
  return out;
}

WronskianSolution solve_wronskian_detailed(const ThetaPoly& f, const ThetaLike& h, const WronskianOptions& opts) {
  const Torus& ctx = f.torus();
  const int m = f.degree();
  if (h.degree() != 2 * m) throw std::invalid_argument("solve_wronskian: deg h must be twice deg f");
  if (m > 1 && min_root_separation(f.roots(), ctx) < opts.multiple_root_tol * ctx.diagonal()) {
    throw MultipleRoot("solve_wronskian: f has a root cluster below the multiple-root tolerance");
  }
  const Multipliers mf = f.multipliers();
  const Multipliers mh = h.multipliers();
  const Multipliers mg{mh.log_a - mf.log_a, mh.log_b - mf.log_b};
  if (std::abs(std::exp(mg.log_a - mf.log_a) - 1.0) < opts.degenerate_tol &&
      std::abs(std::exp(mg.log_b - mf.log_b) - 1.0) < opts.degenerate_tol) {
    throw DegenerateMultipliers("solve_wronskian: f and g would share their multipliers");
  }

  std::vector<double> res = residues_relative(h, f);
  const double worst = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
  if (worst > opts.residue_tol) {
    std::ostringstream os;
    os << "solve_wronskian: h/f^2 has a nonzero residue (relative " << worst << ")";
    throw ResidueViolation(os.str());
  }

  auto space = std::make_shared<const ThetaSpace>(m, mg, ctx);
  const cplx tau = ctx.tau();
  const int rows = 4 * m;
  Eigen::MatrixXcd M(rows, m);
  Eigen::VectorXcd rhs(rows);
  for (int i = 0; i < rows; ++i) {
    const cplx x = r2_point(i + 1, 0.0, tau);
    const ScaledJet F = f.jet(x, 1);
    const ScaledJet H = h.jet(x, 0);
    std::vector<ScaledJet> bj;
    for (int r = 1; r <= m; ++r) bj.push_back(space->basis_jet(r, x, 1));
    // common row scale: exp(F + B_1) cancels the exponential size of the row
    const cplx s = F.log_scale + bj[0].log_scale;
    double big = 0.0;
    for (int r = 0; r < m; ++r) {
      M(i, r) = std::exp(F.log_scale + bj[r].log_scale - s) * (F.jet[0] * bj[r].jet[1] - F.jet[1] * bj[r].jet[0]);
      big = std::max(big, std::abs(M(i, r)));
    }
    rhs[i] = std::exp(H.log_scale - s) * H.jet[0];
    if (big > 0.0) {
      M.row(i) /= big;
      rhs[i] /= big;
    }
  }
  Eigen::VectorXd colscale(m);
  for (int r = 0; r < m; ++r) {
    colscale[r] = M.col(r).cwiseAbs().maxCoeff();
    if (colscale[r] == 0.0) colscale[r] = 1.0;
    M.col(r) /= colscale[r];
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  Eigen::VectorXcd y = svd.solve(rhs);
  for (int r = 0; r < m; ++r) y[r] /= colscale[r];

  WronskianSolution sol{ThetaFunction(space, y), 0.0, sv[0] / sv[sv.size() - 1], std::move(res)};

  double num = 0.0, den = 0.0;
  for (int i = 0; i < 4 * m + 2; ++i) {
    const cplx x = r2_point(i + 1, 0.0, tau, 0.2371);
    const ScaledJet W = wronskian_jet(f, sol.g, x, 0);
    const ScaledJet H = h.jet(x, 0);
    const cplx a = std::exp(W.log_scale - H.log_scale) * W.jet[0];
    num += std::norm(a - H.jet[0]);
    den += std::norm(H.jet[0]);
  }
  sol.residual = std::sqrt(num / den);
  return sol;
}

ThetaPoly solve_wronskian(const ThetaPoly& f, const ThetaLike& h, const FundamentalParallelogram& cell,
                          const WronskianOptions& opts) {
  return to_theta_poly(solve_wronskian_detailed(f, h, opts).g, cell);
}

AntiderivativeSolution::AntiderivativeSolution(const ThetaPoly& f, const ThetaLike& h, cplx x0)
    : f_(f), h_(h), x0_(x0) {
  const Multipliers mf = f.multipliers();
  const Multipliers mh = h.multipliers();
  A_ = std::exp(mh.log_a - 2.0 * mf.log_a);
  B_ = std::exp(mh.log_b - 2.0 * mf.log_b);
  a_ = integrate(x0, x0 + 1.0);
  b_ = integrate(x0, x0 + f.torus().tau());
  C_ = a_ / (A_ - 1.0);
}

double AntiderivativeSolution::period_mismatch() const {
  const cplx l = a_ * (B_ - 1.0);
  const cplx r = b_ * (A_ - 1.0);
  return std::abs(l - r) / (std::abs(l) + std::abs(r));
}

cplx AntiderivativeSolution::integrand(cplx x) const {
  const ScaledJet hv = h_.jet(x, 0);
  const ScaledJet fv = f_.jet(x, 0);
  return std::exp(hv.log_scale - 2.0 * fv.log_scale) * hv.jet[0] / (fv.jet[0] * fv.jet[0]);
}

cplx AntiderivativeSolution::integrate(cplx from, cplx to) const {
  constexpr int kPanels = 64;
  const cplx d = to - from;
  cplx sum = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double lo = static_cast<double>(p) / kPanels, hi = static_cast<double>(p + 1) / kPanels;
    sum += boost::math::quadrature::gauss<double, 20>::integrate(
        [&](double s) { return integrand(from + s * d); }, lo, hi);
  }
  return sum * d;
}

cplx AntiderivativeSolution::operator()(cplx x) const { return f_.jet(x, 0).value() * (integrate(x0_, x) + C_); }

}  // namespace ebethe
