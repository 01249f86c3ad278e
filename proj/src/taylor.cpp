#include "ebethe/taylor.hpp"

#include <algorithm>
#include <stdexcept>

namespace ebethe {

Taylor::Taylor(int order, cplx c0) : c_(static_cast<size_t>(order + 1), cplx(0.0)) {
  if (order < 0) throw std::invalid_argument("Taylor: negative order");
  c_[0] = c0;
}

Taylor Taylor::from_derivs(const std::vector<cplx>& d) {
  Taylor t(static_cast<int>(d.size()) - 1);
  double fact = 1.0;
  for (size_t k = 0; k < d.size(); ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    t.c_[k] = d[k] / fact;
  }
  return t;
}

Taylor Taylor::variable(cplx x0, int order) {
  Taylor t(order, x0);
  if (order >= 1) t.c_[1] = 1.0;
  return t;
}

cplx Taylor::deriv(int k) const {
  double fact = 1.0;
  for (int j = 2; j <= k; ++j) fact *= j;
  return c_[k] * fact;
}

std::vector<cplx> Taylor::derivs() const {
  std::vector<cplx> d(c_.size());
  double fact = 1.0;
  for (size_t k = 0; k < c_.size(); ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    d[k] = c_[k] * fact;
  }
  return d;
}

Taylor Taylor::derivative() const {
  if (order() == 0) throw std::invalid_argument("Taylor: derivative of order-0 series");
  Taylor d(order() - 1);
  for (int k = 1; k <= order(); ++k) d.c_[k - 1] = c_[k] * static_cast<double>(k);
  return d;
}

Taylor Taylor::truncated(int n) const {
  Taylor t(n);
  for (int k = 0; k <= std::min(n, order()); ++k) t.c_[k] = c_[k];
  return t;
}

Taylor Taylor::reflected() const {
  Taylor t = *this;
  for (size_t k = 1; k < t.c_.size(); k += 2) t.c_[k] = -t.c_[k];
  return t;
}

Taylor& Taylor::operator+=(const Taylor& o) {
  c_.resize(std::min(c_.size(), o.c_.size()));
  for (size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

Taylor& Taylor::operator-=(const Taylor& o) {
  c_.resize(std::min(c_.size(), o.c_.size()));
  for (size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

Taylor& Taylor::operator*=(const Taylor& o) { return *this = *this * o; }
Taylor& Taylor::operator/=(const Taylor& o) { return *this = *this / o; }

Taylor& Taylor::operator+=(cplx s) {
  c_[0] += s;
  return *this;
}
Taylor& Taylor::operator-=(cplx s) {
  c_[0] -= s;
  return *this;
}
Taylor& Taylor::operator*=(cplx s) {
  for (auto& c : c_) c *= s;
  return *this;
}
Taylor& Taylor::operator/=(cplx s) {
  for (auto& c : c_) c /= s;
  return *this;
}

Taylor Taylor::operator-() const {
  Taylor t = *this;
  for (auto& c : t.c_) c = -c;
  return t;
}

Taylor operator*(const Taylor& a, const Taylor& b) {
  const int n = std::min(a.order(), b.order());
  Taylor r(n);
  for (int k = 0; k <= n; ++k) {
    cplx s = 0.0;
    for (int j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
    r.c_[k] = s;
  }
  return r;
}

Taylor operator/(const Taylor& a, const Taylor& b) {
  const int n = std::min(a.order(), b.order());
  Taylor r(n);
  const cplx b0 = b.c_[0];
  for (int k = 0; k <= n; ++k) {
    cplx s = a.c_[k];
    for (int j = 1; j <= k; ++j) s -= b.c_[j] * r.c_[k - j];
    r.c_[k] = s / b0;
  }
  return r;
}

Taylor exp(const Taylor& a) {
  // r' = a' r
  const int n = a.order();
  Taylor r(n, std::exp(a[0]));
  for (int k = 1; k <= n; ++k) {
    cplx s = 0.0;
    for (int j = 1; j <= k; ++j) s += static_cast<double>(j) * a[j] * r[k - j];
    r[k] = s / static_cast<double>(k);
  }
  return r;
}

Taylor log_derivative(const Taylor& a) { return a.derivative() / a.truncated(a.order() - 1); }

}  // namespace ebethe
