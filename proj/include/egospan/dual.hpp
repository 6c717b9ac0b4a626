#pragma once

// Forward-mode dual numbers with a fixed number of derivative slots.

#include <cmath>

#include <Eigen/Core>

namespace egospan {

template <int N>
struct Dual {
  using Grad = Eigen::Matrix<double, N, 1>;
  double v = 0.0;
  Grad d = Grad::Zero();

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: constants promote implicitly
  Dual(double value, const Grad& grad) : v(value), d(grad) {}

  static Dual variable(double value, int slot) {
    Dual x(value);
    x.d[slot] = 1.0;
    return x;
  }

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    d = (d - (v * inv) * o.d) * inv;
    v *= inv;
    return *this;
  }
};

template <int N> Dual<N> operator-(const Dual<N>& a) { return {-a.v, -a.d}; }
template <int N> Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> Dual<N> operator+(double a, Dual<N> b) { b.v += a; return b; }
template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> Dual<N> operator-(double a, const Dual<N>& b) { return {a - b.v, -b.d}; }
template <int N> Dual<N> operator*(Dual<N> a, double b) { a.v *= b; a.d *= b; return a; }
template <int N> Dual<N> operator*(double a, Dual<N> b) { b.v *= a; b.d *= a; return b; }
template <int N> Dual<N> operator/(Dual<N> a, double b) { a.v /= b; a.d /= b; return a; }
template <int N> Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) / b; }

template <int N> bool operator==(const Dual<N>& a, const Dual<N>& b) { return a.v == b.v; }
template <int N> bool operator!=(const Dual<N>& a, const Dual<N>& b) { return a.v != b.v; }
template <int N> bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <int N> bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.v > b.v; }
template <int N> bool operator<=(const Dual<N>& a, const Dual<N>& b) { return a.v <= b.v; }
template <int N> bool operator>=(const Dual<N>& a, const Dual<N>& b) { return a.v >= b.v; }

template <int N>
Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return {s, s > 0.0 ? Eigen::Matrix<double, N, 1>(a.d / (2.0 * s)) : Eigen::Matrix<double, N, 1>::Zero()};
}

template <int N>
Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  if (r2 == 0.0) return Dual<N>(std::atan2(y.v, x.v));
  return {std::atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2};
}

template <int N>
Dual<N> abs(const Dual<N>& a) {
  return a.v < 0.0 ? -a : a;
}

inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N>& x) { return x.v; }

}  // namespace egospan

namespace Eigen {

template <int N>
struct NumTraits<egospan::Dual<N>> : NumTraits<double> {
  using Real = egospan::Dual<N>;
  using NonInteger = egospan::Dual<N>;
  using Nested = egospan::Dual<N>;
  using Literal = egospan::Dual<N>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3,
  };
};

template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<egospan::Dual<N>, double, BinaryOp> {
  using ReturnType = egospan::Dual<N>;
};

template <int N, typename BinaryOp>
struct ScalarBinaryOpTraits<double, egospan::Dual<N>, BinaryOp> {
  using ReturnType = egospan::Dual<N>;
};

}  // namespace Eigen
