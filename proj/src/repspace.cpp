#include "ebethe/repspace.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ebethe/errors.hpp"

namespace ebethe {

WeightBasis::WeightBasis(int m) : m_(m) {
  if (m < 1 || m > 6) throw std::invalid_argument("WeightBasis: m must be in 1..6");
  subsets_ = all_subsets(2 * m, m);
  by_mask_.assign(std::size_t{1} << (2 * m), -1);
  for (int i = 0; i < dim(); ++i) {
    unsigned mk = 0;
    for (int s : subsets_[i]) mk |= 1u << s;
    masks_.push_back(mk);
    by_mask_[mk] = i;
  }
}

int WeightBasis::index_of_mask(unsigned mask) const {
  if (mask >= by_mask_.size() || by_mask_[mask] < 0) throw std::out_of_range("WeightBasis: not a zero weight vector");
  return by_mask_[mask];
}

int WeightBasis::index(const Subset& I) const {
  unsigned mk = 0;
  for (int s : I) {
    if (s < 0 || s >= n() || (mk >> s) & 1u) throw std::out_of_range("WeightBasis: bad subset");
    mk |= 1u << s;
  }
  return index_of_mask(mk);
}

VJet VJet::from_vector(const ZeroWeightVector& v, int order) {
  VJet out(static_cast<int>(v.size()), order);
  for (int i = 0; i < out.dim(); ++i) out.comp[i][0] = v[i];
  return out;
}

int VJet::order() const {
  int k = comp.empty() ? -1 : comp[0].order();
  for (const auto& c : comp) k = std::min(k, c.order());
  return k;
}

ZeroWeightVector VJet::deriv(int k) const {
  ZeroWeightVector v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = comp[i].deriv(k);
  return v;
}

VJet VJet::derivative() const {
  VJet out;
  for (const auto& c : comp) out.comp.push_back(c.derivative());
  return out;
}

VJet VJet::truncated(int order) const {
  VJet out;
  for (const auto& c : comp) out.comp.push_back(c.truncated(order));
  return out;
}

VJet VJet::reflected() const {
  VJet out;
  for (const auto& c : comp) out.comp.push_back(c.reflected());
  return out;
}

VJet& VJet::operator+=(const VJet& o) {
  if (o.dim() != dim()) throw std::invalid_argument("VJet: dimension mismatch");
  for (int i = 0; i < dim(); ++i) comp[i] += o.comp[i];
  return *this;
}

VJet& VJet::operator-=(const VJet& o) {
  if (o.dim() != dim()) throw std::invalid_argument("VJet: dimension mismatch");
  for (int i = 0; i < dim(); ++i) comp[i] -= o.comp[i];
  return *this;
}

VJet& VJet::operator*=(cplx s) {
  for (auto& c : comp) c *= s;
  return *this;
}

namespace {

// sigma(x, -lambda) and sigma(x, lambda) as series in lambda
Taylor sigma_minus(cplx x, cplx lambda, const Torus& ctx, int order) {
  return sigma_w_jet(x, -lambda, ctx, order).reflected();
}
Taylor sigma_plus(cplx x, cplx lambda, const Torus& ctx, int order) { return sigma_w_jet(x, lambda, ctx, order); }

int basis_m(const std::vector<cplx>& z) {
  if (z.size() % 2 != 0 || z.empty()) throw std::invalid_argument("repspace: need 2m points");
  return static_cast<int>(z.size() / 2);
}

void check_dim(const VJet& F, const WeightBasis& b) {
  if (F.dim() != b.dim()) throw std::invalid_argument("repspace: jet dimension does not match C(2m, m)");
}

bool bit(unsigned mask, int s) { return (mask >> s) & 1u; }

VJet apply_h0(const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx, const WeightBasis& b) {
  const int K = F.order();
  if (K < 2) throw std::invalid_argument("apply_kzb: H_0 needs a jet of order >= 2");
  const int n = b.n();
  const int R = K - 2;
  VJet out(b.dim(), R);
  for (int i = 0; i < b.dim(); ++i) out.comp[i] = 2.0 * F.comp[i].derivative().derivative();

  const cplx e0 = eta0(ctx);
  const Taylor phi_p0 = phi_x_jet(lambda, 0.0, ctx, R);
  const Taylor phi_m0 = phi_x_jet(-lambda, 0.0, ctx, R).reflected();
  for (int s = 0; s < n; ++s) {
    for (int i = 0; i < b.dim(); ++i) {
      // e12 e21 on v1 and e21 e12 on v2 are both the identity
      const Taylor& c = bit(b.mask(i), s) ? phi_m0 : phi_p0;
      out.comp[i] += (0.25 * e0) * F.comp[i] - c * F.comp[i];
    }
  }
  for (int s = 0; s < n; ++s) {
    for (int p = 0; p < n; ++p) {
      if (p == s) continue;
      const cplx w = z[s] - z[p];
      const cplx et = eta(w, ctx);
      const Taylor fa = phi_x_jet(lambda, w, ctx, R);
      const Taylor fb = phi_x_jet(-lambda, w, ctx, R).reflected();
      for (int i = 0; i < b.dim(); ++i) {
        const unsigned M = b.mask(i);
        out.comp[i] += (0.25 * et * static_cast<double>(b.h(i, s) * b.h(i, p))) * F.comp[i];
        if (bit(M, s) && !bit(M, p)) {
          out.comp[b.index_of_mask((M & ~(1u << s)) | (1u << p))] -= fa * F.comp[i];
        } else if (!bit(M, s) && bit(M, p)) {
          out.comp[b.index_of_mask((M & ~(1u << p)) | (1u << s))] -= fb * F.comp[i];
        }
      }
    }
  }
  return out * (1.0 / (4.0 * kPi * kI));
}

VJet apply_hs(int s, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx,
              const WeightBasis& b) {
  const int K = F.order();
  if (K < 1) throw std::invalid_argument("apply_kzb: H_s needs a jet of order >= 1");
  const int R = K - 1;
  VJet out(b.dim(), R);
  const VJet dF = F.derivative();
  for (int i = 0; i < b.dim(); ++i) out.comp[i] -= static_cast<double>(b.h(i, s)) * dF.comp[i];
  for (int p = 0; p < b.n(); ++p) {
    if (p == s) continue;
    const cplx w = z[s] - z[p];
    const cplx r = rho(w, ctx);
    const Taylor sm = sigma_minus(w, lambda, ctx, R);
    const Taylor sp = sigma_plus(w, lambda, ctx, R);
    for (int i = 0; i < b.dim(); ++i) {
      const unsigned M = b.mask(i);
      out.comp[i] += (0.5 * r * static_cast<double>(b.h(i, s) * b.h(i, p))) * F.comp[i];
      // e12^(s) e21^(p) and e21^(s) e12^(p)
      if (bit(M, s) && !bit(M, p)) {
        out.comp[b.index_of_mask((M & ~(1u << s)) | (1u << p))] += sm * F.comp[i];
      } else if (!bit(M, s) && bit(M, p)) {
        out.comp[b.index_of_mask((M & ~(1u << p)) | (1u << s))] += sp * F.comp[i];
      }
    }
  }
  return out;
}

// Vectors of arbitrary weight in the tensor product, keyed by the v2 positions.
using MaskVec = std::map<unsigned, Taylor>;

void accumulate(MaskVec& v, unsigned key, const Taylor& t) {
  auto it = v.find(key);
  if (it == v.end()) {
    v.emplace(key, t);
  } else {
    it->second += t;
  }
}

double e11_site(unsigned M, int k) { return bit(M, k) ? -0.5 : 0.5; }
double e11_total(unsigned M, int n) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += e11_site(M, k);
  return s;
}

struct RstCoefficients {
  std::vector<cplx> rho_x, rho_prime_x;
  std::vector<Taylor> sig_plus, sig_minus;  // sigma(x - z_k, +-lambda)
  Taylor rho_lam, rho_minus_lam;            // rho(lambda_12), rho(lambda_21)
};

RstCoefficients rst_coefficients(cplx x, cplx lambda, const std::vector<cplx>& z, const Torus& ctx, int order) {
  RstCoefficients c;
  for (cplx zk : z) {
    c.rho_x.push_back(rho(x - zk, ctx));
    c.rho_prime_x.push_back(rho_prime(x - zk, ctx));
    c.sig_plus.push_back(sigma_plus(x - zk, lambda, ctx, order));
    c.sig_minus.push_back(sigma_minus(x - zk, lambda, ctx, order));
  }
  c.rho_lam = rho_jet(lambda, ctx, order);
  c.rho_minus_lam = rho_jet(-lambda, ctx, order).reflected();
  return c;
}

// L_11 = e+_11(x) + rho(lambda_12) e_22 and L_22 = e+_22(x) + rho(lambda_21) e_11, both diagonal
MaskVec apply_l_diag(int j, const MaskVec& v, const RstCoefficients& c, int n) {
  MaskVec out;
  for (const auto& [M, t] : v) {
    cplx ep = 0.0;
    for (int k = 0; k < n; ++k) ep += c.rho_x[k] * (j == 1 ? e11_site(M, k) : -e11_site(M, k));
    const double other = j == 1 ? -e11_total(M, n) : e11_total(M, n);
    const Taylor& r = j == 1 ? c.rho_lam : c.rho_minus_lam;
    accumulate(out, M, ep * t + other * (r * t));
  }
  return out;
}

// L_12 = e+_21(x) = sum_k sigma(x - z_k, lambda_21) e21^(k): v1 -> v2
MaskVec apply_l12(const MaskVec& v, const RstCoefficients& c, int n) {
  MaskVec out;
  for (const auto& [M, t] : v)
    for (int k = 0; k < n; ++k)
      if (!bit(M, k)) accumulate(out, M | (1u << k), c.sig_minus[k] * t);
  return out;
}

// L_21 = e+_12(x) = sum_k sigma(x - z_k, lambda_12) e12^(k): v2 -> v1
MaskVec apply_l21(const MaskVec& v, const RstCoefficients& c, int n) {
  MaskVec out;
  for (const auto& [M, t] : v)
    for (int k = 0; k < n; ++k)
      if (bit(M, k)) accumulate(out, M & ~(1u << k), c.sig_plus[k] * t);
  return out;
}

MaskVec derivative(const MaskVec& v) {
  MaskVec out;
  for (const auto& [M, t] : v) out.emplace(M, t.derivative());
  return out;
}

MaskVec combine(const MaskVec& a, const MaskVec& b, double sb) {
  MaskVec out = a;
  for (const auto& [M, t] : b) accumulate(out, M, sb * t);
  return out;
}

MaskVec to_masks(const VJet& F, const WeightBasis& b) {
  MaskVec v;
  for (int i = 0; i < b.dim(); ++i) v.emplace(b.mask(i), F.comp[i]);
  return v;
}

VJet from_masks(const MaskVec& v, const WeightBasis& b, int order) {
  VJet out(b.dim(), order);
  for (const auto& [M, t] : v) {
    const int i = b.index_of_mask(M);
    out.comp[i] += t;
  }
  return out.truncated(order);
}

}  // namespace

VJet apply_kzb(int a, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx) {
  const WeightBasis b(basis_m(z));
  check_dim(F, b);
  if (a < 0 || a > b.n()) throw std::out_of_range("apply_kzb: operator index out of range");
  if (a == 0) return apply_h0(F, lambda, z, ctx, b);
  return apply_hs(a - 1, F, lambda, z, ctx, b);
}

Eigen::Matrix2cd casimir_c2_matrix() {
  Eigen::Matrix2cd e11, e22, e12, e21;
  e11 << 0.5, 0, 0, -0.5;
  e22 = -e11;
  e12 << 0, 1, 0, 0;
  e21 << 0, 0, 1, 0;
  return e11 * e22 - e12 * e21 + e11;
}

VJet s2_via_kzb(cplx x, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx) {
  const WeightBasis b(basis_m(z));
  check_dim(F, b);
  VJet out = apply_h0(F, lambda, z, ctx, b) * (-2.0 * kPi * kI);
  for (int s = 0; s < b.n(); ++s) {
    ctx.check_pole(x - z[s], "s2_via_kzb");
    const VJet hs = apply_hs(s, F, lambda, z, ctx, b);
    out -= hs * rho(x - z[s], ctx);
    out -= F * (kCasimirC2 * rho_prime(x - z[s], ctx));
  }
  return out;
}

VJet apply_rst_n2(cplx x, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx) {
  const WeightBasis b(basis_m(z));
  check_dim(F, b);
  const int K = F.order();
  if (K < 2) throw std::invalid_argument("apply_rst_n2: needs a jet of order >= 2");
  const int n = b.n();
  const auto c = rst_coefficients(x, lambda, z, ctx, K);
  const MaskVec f = to_masks(F, b);

  // D_22 F = (-d_lambda2 + L_22) F with d_lambda2 = -d_lambda
  const MaskVec g = combine(derivative(f), apply_l_diag(2, f, c, n), 1.0);
  // D_11 acts on D_22 F; its d_x hits only the x-dependence of L_22, giving L_22' F
  MaskVec d11d22 = combine(apply_l_diag(1, g, c, n), derivative(g), -1.0);
  MaskVec l22p;
  for (const auto& [M, t] : f) {
    cplx s = 0.0;
    for (int k = 0; k < n; ++k) s -= c.rho_prime_x[k] * e11_site(M, k);
    l22p.emplace(M, s * t);
  }
  d11d22 = combine(d11d22, l22p, 1.0);
  const MaskVec d21d12 = apply_l21(apply_l12(f, c, n), c, n);
  return from_masks(combine(d11d22, d21d12, -1.0), b, K - 2);
}

VJet apply_s1(cplx x, const VJet& F, cplx lambda, const std::vector<cplx>& z, const Torus& ctx) {
  const WeightBasis b(basis_m(z));
  check_dim(F, b);
  const int K = F.order();
  if (K < 1) throw std::invalid_argument("apply_s1: needs a jet of order >= 1");
  const auto c = rst_coefficients(x, lambda, z, ctx, K);
  const MaskVec f = to_masks(F, b);
  const MaskVec df = derivative(f);
  // (d_lambda1 + d_lambda2) F = F' - F'
  MaskVec out = combine(apply_l_diag(1, f, c, b.n()), apply_l_diag(2, f, c, b.n()), 1.0);
  out = combine(combine(out, df, -1.0), df, 1.0);
  return from_masks(out, b, K - 1);
}

VJet psi_jet(cplx lambda, const BetheSolution& sol, int order) {
  if (!sol.accepted()) throw std::invalid_argument("psi: solution is not accepted");
  const auto& ctx = sol.problem.torus();
  ctx.check_pole(lambda, "psi (lambda)");
  const int m = sol.problem.m();
  const auto& z = sol.problem.z();
  const WeightBasis b(m);
  std::vector<std::vector<Taylor>> S(m);
  for (int j = 0; j < m; ++j)
    for (int a = 0; a < b.n(); ++a) S[j].push_back(sigma_minus(sol.t[j] - z[a], lambda, ctx, order));
  const Taylor e = exp(Taylor::variable(lambda, order) * (kPi * kI * sol.mu));
  VJet out(b.dim(), order);
  std::vector<int> perm(m);
  for (int i = 0; i < b.dim(); ++i) {
    const Subset& I = b.subset(i);
    std::iota(perm.begin(), perm.end(), 0);
    Taylor W(order);
    do {
      Taylor p = S[perm[0]][I[0]];
      for (int j = 1; j < m; ++j) p *= S[perm[j]][I[j]];
      W += p;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.comp[i] = e * W;
  }
  return out;
}

ZeroWeightVector psi(cplx lambda, const BetheSolution& sol) { return psi_jet(lambda, sol, 0).value(); }

VJet psi_jet_fd(cplx lambda, const BetheSolution& sol, double step) {
  const auto f = [&](double k) { return psi(lambda + k * step, sol); };
  const ZeroWeightVector f0 = f(0), p1 = f(1), m1 = f(-1), p2 = f(2), m2 = f(-2);
  const ZeroWeightVector d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * step);
  const ZeroWeightVector d2 = (-p2 + 16.0 * p1 - 30.0 * f0 + 16.0 * m1 - m2) / (12.0 * step * step);
  VJet out(static_cast<int>(f0.size()), 2);
  for (int i = 0; i < out.dim(); ++i) {
    out.comp[i][0] = f0[i];
    out.comp[i][1] = d1[i];
    out.comp[i][2] = 0.5 * d2[i];
  }
  return out;
}

VField psi_field(const BetheSolution& sol) {
  return [sol](cplx lambda, int order) { return psi_jet(lambda, sol, order); };
}

cplx KzbEigenvalues::sum() const { return std::accumulate(E.begin(), E.end(), cplx(0.0)); }

KzbEigenvalues kzb_eigenvalues(const BetheSolution& sol) {
  const auto& z = sol.problem.z();
  const auto& ctx = sol.problem.torus();
  KzbEigenvalues ev;
  ev.E0 = master_dtau(sol.mu, sol.t, z, ctx);
  for (int a = 0; a < static_cast<int>(z.size()); ++a) ev.E.push_back(master_dz(a, sol.mu, sol.t, z, ctx));
  return ev;
}

cplx fundamental_b2(cplx x, const BetheSolution& sol) {
  const auto& ctx = sol.problem.torus();
  cplx l1 = kPi * kI * sol.mu, l2 = 0.0;
  for (cplx t : sol.t) {
    l1 += rho(x - t, ctx);
    l2 += rho_prime(x - t, ctx);
  }
  for (cplx z : sol.problem.z()) {
    l1 -= 0.5 * rho(x - z, ctx);
    l2 -= 0.5 * rho_prime(x - z, ctx);
  }
  return -l2 - l1 * l1;
}

ZeroWeightVector weyl_involution(const ZeroWeightVector& v, const WeightBasis& basis) {
  if (v.size() != basis.dim()) throw std::invalid_argument("weyl_involution: dimension mismatch");
  const unsigned full = (1u << basis.n()) - 1u;
  const double sign = basis.m() % 2 == 0 ? 1.0 : -1.0;
  ZeroWeightVector out = ZeroWeightVector::Zero(v.size());
  for (int i = 0; i < basis.dim(); ++i) out[basis.index_of_mask(full & ~basis.mask(i))] = sign * v[i];
  return out;
}

VJet weyl_on_jet(const VJet& F_at_minus_lambda, const WeightBasis& basis) {
  check_dim(F_at_minus_lambda, basis);
  const VJet r = F_at_minus_lambda.reflected();
  const unsigned full = (1u << basis.n()) - 1u;
  const double sign = basis.m() % 2 == 0 ? 1.0 : -1.0;
  VJet out = r;
  for (int i = 0; i < basis.dim(); ++i) out.comp[basis.index_of_mask(full & ~basis.mask(i))] = r.comp[i] * sign;
  return out;
}

VField weyl_on_function(VField F, const WeightBasis& basis) {
  return [F = std::move(F), basis](cplx lambda, int order) { return weyl_on_jet(F(-lambda, order), basis); };
}

}  // namespace ebethe
