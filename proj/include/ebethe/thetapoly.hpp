#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "ebethe/elliptic.hpp"
#include "ebethe/roots.hpp"

namespace ebethe {

// Half-open cell [base, base+1) x [base, base+tau) and its interior.
class FundamentalParallelogram {
 public:
  FundamentalParallelogram(cplx base, const Torus& ctx) : base_(base), tau_(ctx.tau()) {}

  cplx base() const { return base_; }
  // x = base + a + b*tau
  void coords(cplx x, double& a, double& b) const;
  bool contains(cplx x) const;
  // open cell, at least `margin` (in cell coordinates) inside
  bool contains_open(cplx x, double margin = 0.0) const;
  // x = reduced + shift, reduced in the half-open cell
  cplx reduce(cplx x, LatticePoint* shift = nullptr) const;
  Parallelogram cell() const { return {base_, 1.0, tau_}; }

 private:
  cplx base_;
  cplx tau_;
};

// Logs of the quasi-periodicity multipliers (A, B): f(x+1) = A (-1)^m f(x),
// f(x+tau) = B (-1)^m e^{-pi i m tau - 2 pi i m x} f(x).
struct Multipliers {
  cplx log_a;
  cplx log_b;
  cplx a() const { return std::exp(log_a); }
  cplx b() const { return std::exp(log_b); }
};

// An element of some T_{m,A,B}: an entire function with known degree and multipliers.
class ThetaLike {
 public:
  virtual ~ThetaLike() = default;
  virtual int degree() const = 0;
  virtual Multipliers multipliers() const = 0;
  virtual const Torus& torus() const = 0;
  // derivatives 0..order at x, with the exponential size kept in log_scale
  virtual ScaledJet jet(cplx x, int order) const = 0;

  cplx operator()(cplx x) const { return jet(x, 0).value(); }
  LogJet log_jet(cplx x) const;
};

// c e^{2 pi i mu x} prod_j theta(x - t_j)
class ThetaPoly : public ThetaLike {
 public:
  ThetaPoly(cplx scale, cplx mu, std::vector<cplx> roots, const Torus& ctx);

  cplx scale() const { return scale_; }
  cplx mu() const { return mu_; }
  const std::vector<cplx>& roots() const { return roots_; }

  int degree() const override { return static_cast<int>(roots_.size()); }
  Multipliers multipliers() const override;
  const Torus& torus() const override { return ctx_; }
  ScaledJet jet(cplx x, int order) const override;

  // f'/f = 2 pi i mu + sum rho(x - t_j)
  cplx log_derivative(cplx x) const;

 private:
  cplx scale_;
  cplx mu_;
  std::vector<cplx> roots_;
  Torus ctx_;
};

cplx eval(const ThetaPoly& p, cplx x);

// low-discrepancy point i of the cell base + [0,1) + [0,1) tau
cplx r2_point(int i, cplx base, cplx tau, double shift = 0.0);
// max_i |(a/b)(x_i) / (a/b)(x_0) - 1| over `samples` low-discrepancy points; 0 when a is proportional to b
double proportionality_residual(const ThetaLike& a, const ThetaLike& b, cplx base, int samples);

struct CanonicalForm {
  ThetaPoly poly;  // same function, roots in the cell
  cplx label;      // exponent coefficient of poly
};

// Move every root into the cell, compensating the exponent and the scale exactly.
CanonicalForm canonical_coords(const ThetaPoly& p, const FundamentalParallelogram& cell);

// Value comparison at 4m+1 deterministic points (representations are not unique).
bool same_function(const ThetaLike& f, const ThetaLike& g, double rel_tol = 1e-9);

// Wr(f, g)(x) = f g' - f' g
cplx wronskian(const ThetaLike& f, const ThetaLike& g, cplx x);
cplx wronskian(const ThetaPoly& f, const ThetaPoly& g, cplx x);
// Wr with the exponential size split off: value = exp(.log_scale) * .jet[0]
ScaledJet wronskian_jet(const ThetaLike& f, const ThetaLike& g, cplx x, int order);

// Wr(f, g) as a function in its own right; degree and multipliers add up
class WronskianFunction : public ThetaLike {
 public:
  WronskianFunction(std::shared_ptr<const ThetaLike> f, std::shared_ptr<const ThetaLike> g)
      : f_(std::move(f)), g_(std::move(g)) {}

  int degree() const override { return f_->degree() + g_->degree(); }
  Multipliers multipliers() const override;
  const Torus& torus() const override { return f_->torus(); }
  ScaledJet jet(cplx x, int order) const override { return wronskian_jet(*f_, *g_, x, order); }

 private:
  std::shared_ptr<const ThetaLike> f_, g_;
};

// Finite-dimensional space T_{m,A,B}, spanned by Fourier series e^{2 pi i nu x} sum_k a_k e^{2 pi i k x}
// with a_{k+m} = C q^{k+m/2} a_k, C = e^{2 pi i nu tau} B^{-1} (-1)^m.
class ThetaSpace {
 public:
  ThetaSpace(int m, Multipliers mult, const Torus& ctx);

  int dim() const { return m_; }
  const Multipliers& multipliers() const { return mult_; }
  const Torus& torus() const { return ctx_; }
  cplx nu() const { return nu_; }
  cplx log_c() const { return log_c_; }

  // jet of the basis element seeded by a_r = 1, r = 1..m
  ScaledJet basis_jet(int r, cplx x, int order) const;

 private:
  int m_;
  Multipliers mult_;
  Torus ctx_;
  cplx nu_;
  cplx log_c_;
};

// sum_r coeffs[r-1] * basis_r
class ThetaFunction : public ThetaLike {
 public:
  ThetaFunction(std::shared_ptr<const ThetaSpace> space, Eigen::VectorXcd coeffs);

  int degree() const override { return space_->dim(); }
  Multipliers multipliers() const override { return space_->multipliers(); }
  const Torus& torus() const override { return space_->torus(); }
  ScaledJet jet(cplx x, int order) const override;

  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  const ThetaSpace& space() const { return *space_; }
  std::shared_ptr<const ThetaSpace> space_ptr() const { return space_; }

 private:
  std::shared_ptr<const ThetaSpace> space_;
  Eigen::VectorXcd coeffs_;
};

std::vector<ThetaFunction> fourier_basis(int m, Multipliers mult, const Torus& ctx);
std::vector<ThetaFunction> fourier_basis(int m, cplx A, cplx B, const Torus& ctx);

// Roots in the cell plus the exponent and scale of a ThetaLike, i.e. its product form.
ThetaPoly to_theta_poly(const ThetaLike& g, const FundamentalParallelogram& cell,
                        const RootFinderOptions& opts = {});

// Relative residues of h / f^2 at the roots of f: |res| / (r * mean |h/f^2|) on a circle of radius
// r = min(1e-2, half the minimal root separation), 64 trapezoid nodes.
std::vector<double> residues_relative(const ThetaLike& h, const ThetaPoly& f);

struct WronskianOptions {
  double residue_tol = 1e-8;
  double degenerate_tol = 1e-10;
  double multiple_root_tol = 1e-8;
  double residual_tol = 1e-9;
};

struct WronskianSolution {
  ThetaFunction g;
  double residual = 0.0;   // relative, at 4m+2 validation points
  double condition = 0.0;  // of the scaled collocation matrix
  std::vector<double> residues;
};

// The unique g in T_{m, A_h/A_f, B_h/B_f} with Wr(f, g) = h, by collocation in the Fourier basis.
WronskianSolution solve_wronskian_detailed(const ThetaPoly& f, const ThetaLike& h, const WronskianOptions& opts = {});
ThetaPoly solve_wronskian(const ThetaPoly& f, const ThetaLike& h, const FundamentalParallelogram& cell,
                          const WronskianOptions& opts = {});

// Antiderivative construction of the same g: g = f (M + C) with M' = h/f^2, M(x0) = 0,
// a = M(x0+1), b = M(x0+tau), C = a/(A-1) = b/(B-1), where (A, B) are the multipliers of h/f^2.
// Integrates along straight segments; intended as an independent cross-check.
class AntiderivativeSolution {
 public:
  AntiderivativeSolution(const ThetaPoly& f, const ThetaLike& h, cplx x0);

  cplx a() const { return a_; }
  cplx b() const { return b_; }
  cplx A() const { return A_; }
  cplx B() const { return B_; }
  cplx C() const { return C_; }
  // |a(B-1) - b(A-1)| / (|a(B-1)| + |b(A-1)|)
  double period_mismatch() const;
  cplx operator()(cplx x) const;

 private:
  cplx integrate(cplx from, cplx to) const;
  cplx integrand(cplx x) const;

  const ThetaPoly& f_;
  const ThetaLike& h_;
  cplx x0_;
  cplx a_, b_, A_, B_, C_;
};

}  // namespace ebethe
