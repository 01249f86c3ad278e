#include "ebethe/elliptic.hpp"

#include <cmath>
#include <sstream>

namespace ebethe {

namespace {

std::string describe(const char* what, cplx x) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": argument (" << x.real() << ", " << x.imag() << ") is within the pole tolerance";
  return os.str();
}

// log of the quasi-periodicity multiplier theta(x0 + k + l tau) / theta(x0)
cplx shift_log_multiplier(cplx x0, LatticePoint s, cplx tau) {
  const double l = static_cast<double>(s.l);
  const bool odd = ((s.k + s.l) % 2) != 0;
  return cplx(0.0, odd ? kPi : 0.0) - kI * kPi * l * l * tau - k2PiI * l * x0;
}

}  // namespace

Torus::Torus(cplx tau, TorusOptions opts) : tau_(tau), opts_(opts) {
  if (!(tau.imag() > 0.0)) throw ConfigError("torus: Im(tau) must be positive");
  q_ = std::exp(k2PiI * tau);
  const double aq = std::abs(q_);
  if (!(aq < 1.0)) throw ConfigError("torus: |q| must be below 1");

  // theta series terms are bounded on the reduced strip by
  // |q|^{n(n+1)/2} e^{(2n+1) pi Im(tau)/2}; keep a margin for derivatives
  const double it = tau.imag();
  std::vector<cplx> qn;
  int n = 0;
  for (; n < opts_.max_terms; ++n) {
    const double e = 0.5 * n * (n + 1.0);
    const double bound = std::exp(-2.0 * kPi * it * e + (2.0 * n + 1.0) * kPi * it * 0.5) *
                         std::pow((2.0 * n + 1.0) * kPi, 6);
    if (n >= 2 && bound < opts_.trunc_eps * 1e-6) break;
    qn.push_back(std::exp(k2PiI * tau * e));
  }
  cplx p = 0.0;
  for (size_t j = 0; j < qn.size(); ++j) p += ((j % 2) ? -1.0 : 1.0) * (2.0 * j + 1.0) * qn[j];
  qq3_ = p;
  coef_.resize(qn.size());
  for (size_t j = 0; j < qn.size(); ++j) coef_[j] = ((j % 2) ? -1.0 : 1.0) * qn[j] / (kPi * p);

  // (1 - q^n z) with |z| up to |q|^{-1/2}
  nprod_ = 1;
  while (nprod_ < opts_.max_terms && std::pow(aq, nprod_ - 0.5) >= opts_.trunc_eps) ++nprod_;
}

Torus::Reduced Torus::reduce(cplx x) const {
  const double it = tau_.imag();
  const double r = x.imag() / it;
  if (!(std::abs(r) <= opts_.range_bound)) {
    throw RangeError("torus: |Im x| / Im tau exceeds the reduction bound");
  }
  const double l = std::round(r);
  const cplx x1 = x - l * tau_;
  const double k = std::round(x1.real());
  return {x1 - k, LatticePoint{static_cast<long long>(k), static_cast<long long>(l)}};
}

double Torus::lattice_distance(cplx x) const {
  const cplx x0 = reduce(x).x0;
  double best = std::abs(x0);
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b) best = std::min(best, std::abs(x0 - (static_cast<double>(a) + static_cast<double>(b) * tau_)));
  return best;
}

void Torus::check_pole(cplx x, const char* what) const {
  if (lattice_distance(x) < opts_.tol_pole * diagonal()) throw PoleError(describe(what, x));
}

cplx Torus::theta1_factor() const { return 2.0 * kPi * std::exp(kI * kPi * tau_ / 4.0) * qq3_; }

cplx theta(cplx x, const Torus& ctx) {
  const auto r = ctx.reduce(x);
  const cplx q = ctx.q();
  const cplx z = std::exp(k2PiI * r.x0);
  cplx prod = 1.0;
  cplx qn = 1.0;
  for (int n = 1; n <= ctx.product_terms(); ++n) {
    qn *= q;
    const cplx den = 1.0 - qn;
    prod *= (1.0 - qn * z) * (1.0 - qn / z) / (den * den);
  }
  const cplx base = std::sin(kPi * r.x0) / kPi * prod;
  return std::exp(shift_log_multiplier(r.x0, r.shift, ctx.tau())) * base;
}

cplx theta_series(cplx x, const Torus& ctx) {
  const auto r = ctx.reduce(x);
  const auto& c = ctx.series_coeffs();
  cplx s = 0.0;
  for (size_t n = 0; n < c.size(); ++n) s += c[n] * std::sin((2.0 * n + 1.0) * kPi * r.x0);
  return std::exp(shift_log_multiplier(r.x0, r.shift, ctx.tau())) * s;
}

ScaledJet theta_jet(cplx x, const Torus& ctx, int order) {
  const auto r = ctx.reduce(x);
  const auto& c = ctx.series_coeffs();
  Taylor base(order);
  for (size_t n = 0; n < c.size(); ++n) {
    const double w = (2.0 * n + 1.0) * kPi;
    const cplx s = std::sin(w * r.x0);
    const cplx co = std::cos(w * r.x0);
    // k-th derivative of sin(w x) cycles sin, cos, -sin, -cos; divide by k!
    double wk = 1.0;
    for (int k = 0; k <= order; ++k) {
      if (k > 0) wk *= w / k;
      cplx v;
      switch (k % 4) {
        case 0: v = s; break;
        case 1: v = co; break;
        case 2: v = -s; break;
        default: v = -co; break;
      }
      base[k] += c[n] * wk * v;
    }
  }
  ScaledJet out;
  out.log_scale = shift_log_multiplier(r.x0, r.shift, ctx.tau());
  if (r.shift.l == 0) {
    out.jet = base;
  } else {
    // the multiplier varies with x as e^{-2 pi i l h}
    Taylor m(order, 1.0);
    const cplx a = -k2PiI * static_cast<double>(r.shift.l);
    for (int k = 1; k <= order; ++k) m[k] = m[k - 1] * a / static_cast<double>(k);
    out.jet = base * m;
  }
  return out;
}

std::vector<cplx> theta_derivs(cplx x, const Torus& ctx, int order) {
  if (order < 0 || order > 3) throw std::invalid_argument("theta_derivs: order must be in 0..3");
  const auto j = theta_jet(x, ctx, order);
  std::vector<cplx> d = j.jet.derivs();
  const cplx s = std::exp(j.log_scale);
  for (auto& v : d) v *= s;
  return d;
}

cplx theta_dtau(cplx x, const Torus& ctx) {
  const auto r = ctx.reduce(x);
  const cplx tau = ctx.tau();
  // theta(x0) = S / P with S = sum (-1)^n q^{e_n} sin((2n+1) pi x0) / pi, P = sum (-1)^n (2n+1) q^{e_n}
  cplx S = 0.0, St = 0.0, P = 0.0, Pt = 0.0, S1 = 0.0;
  const size_t nt = ctx.series_coeffs().size();
  for (size_t n = 0; n < nt; ++n) {
    const double e = 0.5 * n * (n + 1.0);
    const cplx qe = ((n % 2) ? -1.0 : 1.0) * std::exp(k2PiI * tau * e);
    const double w = (2.0 * n + 1.0) * kPi;
    const cplx sn = std::sin(w * r.x0) / kPi;
    S += qe * sn;
    St += k2PiI * e * qe * sn;
    S1 += qe * std::cos(w * r.x0) * (2.0 * n + 1.0);
    P += (2.0 * n + 1.0) * qe;
    Pt += k2PiI * e * (2.0 * n + 1.0) * qe;
  }
  const cplx th0 = S / P;
  const cplx dth0 = St / P - S * Pt / (P * P);
  const double l = static_cast<double>(r.shift.l);
  const cplx th1 = S1 / P;
  const cplx M = std::exp(shift_log_multiplier(r.x0, r.shift, tau));
  return M * (kI * kPi * l * l * th0 + dth0 - l * th1);
}

Taylor rho_jet(cplx x, const Torus& ctx, int order) {
  ctx.check_pole(x, "rho");
  return log_derivative(theta_jet(x, ctx, order + 1).jet);
}

cplx rho(cplx x, const Torus& ctx) { return rho_jet(x, ctx, 0)[0]; }
cplx rho_prime(cplx x, const Torus& ctx) { return rho_jet(x, ctx, 1).deriv(1); }
cplx rho_second(cplx x, const Torus& ctx) { return rho_jet(x, ctx, 2).deriv(2); }

Taylor sigma_w_jet(cplx x, cplx w, const Torus& ctx, int order) {
  ctx.check_pole(x, "sigma (x)");
  ctx.check_pole(w, "sigma (w)");
  const auto num = theta_jet(x + w, ctx, order);
  const auto den = theta_jet(w, ctx, order);
  const auto tx = theta_jet(x, ctx, 0);
  Taylor s = num.jet / den.jet;
  s *= std::exp(num.log_scale - den.log_scale - tx.log_scale) / tx.jet[0];
  return s;
}

cplx sigma(cplx x, cplx w, const Torus& ctx) { return sigma_w_jet(x, w, ctx, 0)[0]; }

cplx sigma_dw(cplx x, cplx w, const Torus& ctx) {
  return sigma(x, w, ctx) * (rho(x + w, ctx) - rho(w, ctx));
}

Taylor phi_x_jet(cplx x, cplx w, const Torus& ctx, int order) {
  ctx.check_pole(x, "phi (x)");
  const auto rw = ctx.reduce(w);
  if (ctx.lattice_distance(w) < ctx.tol_pole() * ctx.diagonal()) {
    // sigma(w, -x) = e^{2 pi i l x}/(w - lattice) - rho(x) + O(w - lattice): only l = 0 is regular
    if (std::abs(rw.x0) >= ctx.tol_pole() * ctx.diagonal() || rw.shift.l != 0) {
      throw PoleError("phi: w is within the pole tolerance of a non-integer lattice point");
    }
    return -rho_jet(x, ctx, order + 1).derivative();
  }
  // sigma(w, -x) = -theta(w - x) / (theta(w) theta(x)), expanded in x
  const auto num = theta_jet(w - x, ctx, order + 1);
  const auto tw = theta_jet(w, ctx, 0);
  const auto tx = theta_jet(x, ctx, order + 1);
  Taylor s = num.jet.reflected() / tx.jet;
  s *= -std::exp(num.log_scale - tw.log_scale - tx.log_scale) / tw.jet[0];
  return s.derivative();
}

cplx phi(cplx x, cplx w, const Torus& ctx) { return phi_x_jet(x, w, ctx, 0)[0]; }

cplx eta(cplx x, const Torus& ctx) {
  const auto r = ctx.reduce(x);
  if (r.shift.l == 0 && std::abs(r.x0) < 1e-3) {
    // theta is odd: divide theta'' and theta by x and sum the even series
    constexpr int N = 15;
    const Taylor c = theta_jet(0.0, ctx, N).jet;
    const cplx x2 = r.x0 * r.x0;
    cplx num = 0.0, den = 0.0, p = 1.0;
    for (int k = 1; k <= N; k += 2) {
      den += c[k] * p;
      if (k + 2 <= N) num += static_cast<double>((k + 2) * (k + 1)) * c[k + 2] * p;
      p *= x2;
    }
    return num / den;
  }
  ctx.check_pole(x, "eta");
  const auto j = theta_jet(x, ctx, 2);
  return j.jet.deriv(2) / j.jet[0];
}

cplx eta0(const Torus& ctx) { return theta_jet(0.0, ctx, 3).jet.deriv(3); }

}  // namespace ebethe
