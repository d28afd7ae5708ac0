#pragma once

// Forward-mode dual numbers. Nesting Dual<Dual<...>> yields exact mixed
// partial derivatives of any order, which the connection and curvature
// kernels rely on (they need up to fifth derivatives of F^2).

#include <cmath>
#include <type_traits>

namespace fpe {

template <class T>
struct Dual {
  T v{};
  T d{};

  constexpr Dual() = default;
  constexpr Dual(double c) : v(c), d(0.0) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(const T& value, const T& deriv) : v(value), d(deriv) {}
  constexpr explicit Dual(const T& value)
    requires(!std::is_same_v<T, double>)
      : v(value), d(0.0) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) { return primal(x.v); }

template <class T>
Dual<T> operator-(const Dual<T>& a) { return {T(-a.v), T(-a.d)}; }

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {T(a.v + b.v), T(a.d + b.d)}; }
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {T(a.v - b.v), T(a.d - b.d)}; }
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {T(a.v * b.v), T(a.d * b.v + a.v * b.d)};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  const T inv = T(1.0) / b.v;
  const T q = a.v * inv;
  return {q, T((a.d - q * b.d) * inv)};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, double c) { return {T(a.v + c), a.d}; }
template <class T>
Dual<T> operator+(double c, const Dual<T>& a) { return a + c; }
template <class T>
Dual<T> operator-(const Dual<T>& a, double c) { return {T(a.v - c), a.d}; }
template <class T>
Dual<T> operator-(double c, const Dual<T>& a) { return {T(c - a.v), T(-a.d)}; }
template <class T>
Dual<T> operator*(const Dual<T>& a, double c) { return {T(a.v * c), T(a.d * c)}; }
template <class T>
Dual<T> operator*(double c, const Dual<T>& a) { return a * c; }
template <class T>
Dual<T> operator/(const Dual<T>& a, double c) { return {T(a.v / c), T(a.d / c)}; }
template <class T>
Dual<T> operator/(double c, const Dual<T>& a) { return Dual<T>(c) / a; }

template <class T>
bool operator<(const Dual<T>& a, const Dual<T>& b) { return primal(a) < primal(b); }
template <class T>
bool operator>(const Dual<T>& a, const Dual<T>& b) { return primal(a) > primal(b); }

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  const T s = sqrt(a.v);
  return {s, T(a.d / (2.0 * s))};
}
template <class T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {sin(a.v), T(a.d * cos(a.v))};
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {cos(a.v), T(-(a.d * sin(a.v)))};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.v);
  return {e, T(a.d * e)};
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.v), T(a.d / a.v)};
}
template <class T>
Dual<T> pow(const Dual<T>& a, double p) {
  using std::pow;
  return {pow(a.v, p), T(a.d * (p * pow(a.v, p - 1.0)))};
}

// Lift a constant into a (possibly nested) dual type.
template <class T>
T constant(double c) { return T(c); }

// Seed a scalar with derivative 1 in the outermost direction.
template <class T>
Dual<T> seeded(const T& value, bool active) {
  if constexpr (std::is_same_v<T, double>) {
    return Dual<T>(value, active ? 1.0 : 0.0);
  } else {
    return Dual<T>(value, active ? T(1.0) : T(0.0));
  }
}

}  // namespace fpe
