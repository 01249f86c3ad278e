#pragma once

#include <complex>
#include <vector>

namespace ebethe {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr cplx kI{0.0, 1.0};
inline constexpr cplx k2PiI{0.0, 2.0 * kPi};

// Truncated Taylor series sum_k c_k h^k about a fixed point.
// Binary operations truncate to the smaller order.
class Taylor {
 public:
  Taylor() = default;
  explicit Taylor(int order, cplx c0 = 0.0);

  static Taylor from_derivs(const std::vector<cplx>& d);
  static Taylor constant(cplx c, int order) { return Taylor(order, c); }
  // the identity map x0 + h
  static Taylor variable(cplx x0, int order);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  cplx& operator[](int k) { return c_[k]; }
  cplx operator[](int k) const { return c_[k]; }
  const std::vector<cplx>& coeffs() const { return c_; }

  cplx value() const { return c_[0]; }
  cplx deriv(int k) const;
  std::vector<cplx> derivs() const;

  // d/dh; order drops by one
  Taylor derivative() const;
  Taylor truncated(int order) const;
  // f(-h), i.e. the expansion of x -> f(2 x0 - x) read back at x0
  Taylor reflected() const;

  Taylor& operator+=(const Taylor& o);
  Taylor& operator-=(const Taylor& o);
  Taylor& operator*=(const Taylor& o);
  Taylor& operator/=(const Taylor& o);
  Taylor& operator+=(cplx s);
  Taylor& operator-=(cplx s);
  Taylor& operator*=(cplx s);
  Taylor& operator/=(cplx s);
  Taylor operator-() const;

  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator*(const Taylor& a, const Taylor& b);
  friend Taylor operator/(const Taylor& a, const Taylor& b);
  friend Taylor operator+(Taylor a, cplx s) { return a += s; }
  friend Taylor operator-(Taylor a, cplx s) { return a -= s; }
  friend Taylor operator*(Taylor a, cplx s) { return a *= s; }
  friend Taylor operator*(cplx s, Taylor a) { return a *= s; }
  friend Taylor operator/(Taylor a, cplx s) { return a /= s; }

 private:
  std::vector<cplx> c_;
};

Taylor exp(const Taylor& a);
// log-derivative a'/a as a series of order one less
Taylor log_derivative(const Taylor& a);

}  // namespace ebethe
