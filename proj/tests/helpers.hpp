#pragma once

#include <complex>
#include <functional>
#include <random>

#include "ebethe/elliptic.hpp"

namespace testutil {

using ebethe::cplx;

// uniform point of the cell base + a + b*tau, kept at least `margin` away from the lattice
inline cplx random_point(std::mt19937_64& rng, const ebethe::Torus& ctx, double margin = 0.05) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const cplx x = u(rng) + u(rng) * ctx.tau();
    if (ctx.lattice_distance(x) > margin) return x;
  }
}

inline cplx random_complex(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng)};
}

inline cplx central_diff(const std::function<cplx(cplx)>& f, cplx x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// fourth-order stencil, used where plain central differences cap out too early
inline cplx central_diff4(const std::function<cplx(cplx)>& f, cplx x, double h = 1e-3) {
  return (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
}

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testutil
