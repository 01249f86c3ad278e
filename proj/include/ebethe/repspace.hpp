#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ebethe/bethe.hpp"
#include "ebethe/elliptic.hpp"
#include "ebethe/taylor.hpp"

namespace ebethe {

// Zero weight subspace of (C^2)^{tensor 2m}: v_I has v2 in the factors listed in I.
class WeightBasis {
 public:
  explicit WeightBasis(int m);

  int m() const { return m_; }
  int n() const { return 2 * m_; }
  int dim() const { return static_cast<int>(subsets_.size()); }
  const std::vector<Subset>& subsets() const { return subsets_; }
  const Subset& subset(int i) const { return subsets_[i]; }
  unsigned mask(int i) const { return masks_[i]; }
  // throws std::out_of_range for a set that is not an m-subset
  int index(const Subset& I) const;
  int index_of_mask(unsigned mask) const;
  // eigenvalue of e11 - e22 in factor s: +1 on v1, -1 on v2
  int h(int i, int s) const { return (masks_[i] >> s) & 1u ? -1 : 1; }

 private:
  int m_;
  std::vector<Subset> subsets_;
  std::vector<unsigned> masks_;
  std::vector<int> by_mask_;
};

using ZeroWeightVector = Eigen::VectorXcd;

// A V[0]-valued function of lambda = lambda_1 - lambda_2 near a point, one Taylor series per basis vector.
struct VJet {
  std::vector<Taylor> comp;

  VJet() = default;
  VJet(int dim, int order) : comp(dim, Taylor(order)) {}
  static VJet from_vector(const ZeroWeightVector& v, int order);

  int dim() const { return static_cast<int>(comp.size()); }
  int order() const;
  ZeroWeightVector value() const { return deriv(0); }
  ZeroWeightVector deriv(int k) const;
  VJet derivative() const;
  VJet truncated(int order) const;
  VJet reflected() const;

  VJet& operator+=(const VJet& o);
  VJet& operator-=(const VJet& o);
  VJet& operator*=(cplx s);
  friend VJet operator+(VJet a, const VJet& b) { return a += b; }
  friend VJet operator-(VJet a, const VJet& b) { return a -= b; }
  friend VJet operator*(VJet a, cplx s) { return a *= s; }
  friend VJet operator*(cplx s, VJet a) { return a *= s; }
};

// lambda -> jet of the requested order about lambda
using VField = std::function<VJet(cplx lambda, int order)>;

// Bethe eigenfunction e^{pi i mu lambda} sum_I W_I v_I with W_I the symmetrized product of sigma(t_j - z_{i_j}, -lambda).
// Throws PoleError for lambda on the lattice, std::invalid_argument for a solution that is not accepted.
VJet psi_jet(cplx lambda, const BetheSolution& sol, int order);
ZeroWeightVector psi(cplx lambda, const BetheSolution& sol);
// value, first and second derivatives from 4th-order central differences
VJet psi_jet_fd(cplx lambda, const BetheSolution& sol, double step = 1e-3);
VField psi_field(const BetheSolution& sol);

// a = 0 gives H_0, a = 1..2m gives H_a. F must have order >= 2 for H_0 and >= 1 otherwise;
// the result has order F.order() - 2 (H_0) or F.order() - 1.
VJet apply_kzb(int a, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx);

// c_2 = e11 e22 - e12 e21 + e11 on C^2 with e11 = -e22 = 1/2, as a 2x2 matrix
Eigen::Matrix2cd casimir_c2_matrix();
inline constexpr double kCasimirC2 = -0.75;

// -2 pi i H_0 - sum_s [rho(x - z_s) H_s + c_2 rho'(x - z_s)]; order F.order() - 2
VJet s2_via_kzb(cplx x, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx);
// second coefficient of the N = 2 column determinant, factors applied right to left; order F.order() - 2
VJet apply_rst_n2(cplx x, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx);
// first coefficient (L11 + L22 - d_lambda1 - d_lambda2) F; order F.order() - 1
VJet apply_s1(cplx x, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx);

struct KzbEigenvalues {
  cplx E0;
  std::vector<cplx> E;
  cplx sum() const;
};
KzbEigenvalues kzb_eigenvalues(const BetheSolution& sol);

// -(ln u)'' - ((ln u)')^2 with (ln u)' = pi i mu + sum rho(x - t_j) - 1/2 sum rho(x - z_s)
cplx fundamental_b2(cplx x, const BetheSolution& sol);

// s.v1 = v2, s.v2 = -v1 in every factor
ZeroWeightVector weyl_involution(const ZeroWeightVector& v, const WeightBasis& basis);
// jet of s.(F(-lambda)) at lambda from the jet of F at -lambda
VJet weyl_on_jet(const VJet& F_at_minus_lambda, const WeightBasis& basis);
VField weyl_on_function(VField F, const WeightBasis& basis);

}  // namespace ebethe
