#pragma once

// 50-digit reference implementation of the normalized theta function by
// direct summation of its sine series. Independent of the library: no
// argument reduction, no product formula, no shared truncation rules.

#include <boost/multiprecision/cpp_complex.hpp>

#include <complex>
#include <vector>

namespace oracle {

using real = boost::multiprecision::cpp_bin_float_50;
using cplx = boost::multiprecision::cpp_complex_50;

inline real pi() { return boost::math::constants::pi<real>(); }

inline cplx to_mp(std::complex<double> z) { return cplx(real(z.real()), real(z.imag())); }
inline std::complex<double> to_double(const cplx& z) {
  return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

// derivatives 0..order of theta at x, with theta = sum (-1)^n q^{n(n+1)/2} sin((2n+1) pi x) / (pi (q;q)^3)
inline std::vector<cplx> theta_derivs(const cplx& x, const cplx& tau, int order, int terms = 60) {
  const cplx i(real(0), real(1));
  std::vector<cplx> d(order + 1, cplx(0));
  cplx norm(0);
  for (int n = 0; n < terms; ++n) {
    const real e = real(n) * real(n + 1) / 2;
    cplx qe = exp(2 * pi() * i * tau * e);
    if (n % 2) qe = -qe;
    norm += real(2 * n + 1) * qe;
    const real w = real(2 * n + 1) * pi();
    const cplx s = sin(w * x);
    const cplx c = cos(w * x);
    real wk = 1;
    for (int k = 0; k <= order; ++k) {
      cplx v;
      switch (k % 4) {
        case 0: v = s; break;
        case 1: v = c; break;
        case 2: v = -s; break;
        default: v = -c; break;
      }
      d[k] += qe * wk * v;
      wk *= w;
    }
  }
  for (auto& v : d) v /= pi() * norm;
  return d;
}

inline cplx theta(const cplx& x, const cplx& tau) { return theta_derivs(x, tau, 0)[0]; }

inline cplx rho(const cplx& x, const cplx& tau) {
  const auto d = theta_derivs(x, tau, 1);
  return d[1] / d[0];
}

inline cplx sigma(const cplx& x, const cplx& w, const cplx& tau) {
  return theta(x + w, tau) / (theta(x, tau) * theta(w, tau));
}

// c e^{2 pi i mu x} prod theta(x - t_j)
inline cplx theta_poly(const cplx& x, const std::vector<cplx>& roots, const cplx& mu, const cplx& tau) {
  const cplx i(real(0), real(1));
  cplx v = exp(2 * pi() * i * mu * x);
  for (const auto& t : roots) v *= theta(x - t, tau);
  return v;
}

}  // namespace oracle
