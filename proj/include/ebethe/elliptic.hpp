#pragma once

#include <complex>
#include <vector>

#include "ebethe/errors.hpp"
#include "ebethe/taylor.hpp"

namespace ebethe {

// k + l*tau
struct LatticePoint {
  long long k = 0;
  long long l = 0;
  bool operator==(const LatticePoint&) const = default;
};

struct TorusOptions {
  double trunc_eps = 1e-16;
  int max_terms = 256;
  double tol_pole = 1e-10;     // relative to the cell diagonal |1 + tau|
  double range_bound = 1e6;    // max |Im x| / Im tau accepted by the reduction
};

class Torus {
 public:
  explicit Torus(cplx tau, TorusOptions opts = {});

  cplx tau() const { return tau_; }
  cplx q() const { return q_; }
  const TorusOptions& options() const { return opts_; }
  double trunc_eps() const { return opts_.trunc_eps; }
  int max_terms() const { return opts_.max_terms; }
  double tol_pole() const { return opts_.tol_pole; }
  double diagonal() const { return std::abs(1.0 + tau_); }

  cplx point(LatticePoint p) const { return static_cast<double>(p.k) + static_cast<double>(p.l) * tau_; }

  struct Reduced {
    cplx x0;  // |Re x0| <= 1/2, |Im x0| <= Im tau / 2
    LatticePoint shift;
  };
  Reduced reduce(cplx x) const;

  // distance from x to the nearest lattice point
  double lattice_distance(cplx x) const;
  // distance between x and y modulo the lattice
  double distance_mod(cplx x, cplx y) const { return lattice_distance(x - y); }
  void check_pole(cplx x, const char* what) const;

  // (q;q)_inf^3 via the Jacobi series
  cplx qpoch_cubed() const { return qq3_; }
  // theta_1 / theta = 2 pi e^{i pi tau/4} (q;q)^3
  cplx theta1_factor() const;

  // theta(x) = sum_n series_coeff(n) * sin((2n+1) pi x)
  const std::vector<cplx>& series_coeffs() const { return coef_; }
  int product_terms() const { return nprod_; }

 private:
  cplx tau_;
  cplx q_;
  TorusOptions opts_;
  cplx qq3_;
  std::vector<cplx> coef_;
  int nprod_ = 0;
};

// theta^{(k)}(x) = exp(log_scale) * jet.deriv(k); keeps the quasi-periodic
// multiplier out of the mantissa so that far-away arguments do not overflow.
struct ScaledJet {
  cplx log_scale = 0.0;
  Taylor jet;

  cplx deriv(int k) const { return std::exp(log_scale) * jet.deriv(k); }
  cplx value() const { return std::exp(log_scale) * jet[0]; }
};

// normalized odd theta function with theta'(0) = 1, product formula
cplx theta(cplx x, const Torus& ctx);
// same function, summed as a sine series
cplx theta_series(cplx x, const Torus& ctx);
// [theta, theta', ..., theta^{(order)}], order <= 3
std::vector<cplx> theta_derivs(cplx x, const Torus& ctx, int order);
// arbitrary-order jet from the term-wise differentiated series
ScaledJet theta_jet(cplx x, const Torus& ctx, int order);
// d/dtau theta(x, tau) at fixed x, term-wise in q
cplx theta_dtau(cplx x, const Torus& ctx);

cplx rho(cplx x, const Torus& ctx);
cplx rho_prime(cplx x, const Torus& ctx);
cplx rho_second(cplx x, const Torus& ctx);
// Taylor expansion of rho about x
Taylor rho_jet(cplx x, const Torus& ctx, int order);

// sigma(x, w) = theta(x + w) / (theta(x) theta(w))
cplx sigma(cplx x, cplx w, const Torus& ctx);
cplx sigma_dw(cplx x, cplx w, const Torus& ctx);
// Taylor expansion in w of sigma(x, .) about w
Taylor sigma_w_jet(cplx x, cplx w, const Torus& ctx, int order);

// phi(x, w) = d/dx sigma(w, -x); regular at w in Z where it equals -rho'(x)
cplx phi(cplx x, cplx w, const Torus& ctx);
// Taylor expansion in x of phi(., w) about x
Taylor phi_x_jet(cplx x, cplx w, const Torus& ctx, int order);

// eta = rho^2 + rho' = theta''/theta; regular on Z, poles on the rest of the lattice
cplx eta(cplx x, const Torus& ctx);
// eta(0) = theta'''(0)
cplx eta0(const Torus& ctx);

}  // namespace ebethe
