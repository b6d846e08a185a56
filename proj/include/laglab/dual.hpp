#pragma once

#include <cmath>
#include <type_traits>

// Forward-mode dual numbers, nestable to arbitrary depth.  Dual<double>
// carries one derivative; Dual<Dual<double>> seeds two independent
// directions, and so on.  All chart / metric evaluations in this library are
// templated on the scalar so that exact derivatives of any order fall out of
// nesting, with no symbolic work and no finite-difference noise.

namespace laglab {

template <class T>
struct Dual {
  T a{};  // value
  T b{};  // derivative

  constexpr Dual() = default;
  constexpr Dual(double v) : a(v), b() {}
  template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
  constexpr Dual(const T& v) : a(v), b() {}
  constexpr Dual(const T& va, const T& vb) : a(va), b(vb) {}
};

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;
using D4 = Dual<D3>;

// Leading numerical value of an arbitrarily nested dual.
inline double value(double x) { return x; }
template <class T>
double value(const Dual<T>& x) {
  return value(x.a);
}

template <class T>
struct scalar_depth : std::integral_constant<int, -1> {};
template <>
struct scalar_depth<double> : std::integral_constant<int, 0> {};
template <class T>
struct scalar_depth<Dual<T>>
    : std::integral_constant<int, 1 + scalar_depth<T>::value> {};
template <class T>
inline constexpr int scalar_depth_v = scalar_depth<T>::value;

// --- arithmetic ---

template <class T>
Dual<T> operator+(const Dual<T>& x, const Dual<T>& y) {
  return {x.a + y.a, x.b + y.b};
}
template <class T>
Dual<T> operator+(const Dual<T>& x, double c) {
  return {x.a + c, x.b};
}
template <class T>
Dual<T> operator+(double c, const Dual<T>& x) {
  return {x.a + c, x.b};
}

template <class T>
Dual<T> operator-(const Dual<T>& x) {
  return {-x.a, -x.b};
}
template <class T>
Dual<T> operator-(const Dual<T>& x, const Dual<T>& y) {
  return {x.a - y.a, x.b - y.b};
}
template <class T>
Dual<T> operator-(const Dual<T>& x, double c) {
  return {x.a - c, x.b};
}
template <class T>
Dual<T> operator-(double c, const Dual<T>& x) {
  return {c - x.a, -x.b};
}

template <class T>
Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a};
}
template <class T>
Dual<T> operator*(const Dual<T>& x, double c) {
  return {x.a * c, x.b * c};
}
template <class T>
Dual<T> operator*(double c, const Dual<T>& x) {
  return {x.a * c, x.b * c};
}

template <class T>
Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
  T q = x.a / y.a;
  return {q, (x.b - q * y.b) / y.a};
}
template <class T>
Dual<T> operator/(const Dual<T>& x, double c) {
  return {x.a / c, x.b / c};
}
template <class T>
Dual<T> operator/(double c, const Dual<T>& x) {
  T q = c / x.a;
  return {q, -q * x.b / x.a};
}

template <class T, class U>
Dual<T>& operator+=(Dual<T>& x, const U& y) {
  x = x + y;
  return x;
}
template <class T, class U>
Dual<T>& operator-=(Dual<T>& x, const U& y) {
  x = x - y;
  return x;
}
template <class T, class U>
Dual<T>& operator*=(Dual<T>& x, const U& y) {
  x = x * y;
  return x;
}
template <class T, class U>
Dual<T>& operator/=(Dual<T>& x, const U& y) {
  x = x / y;
  return x;
}

// --- elementary functions (recurse through nesting via unqualified calls) ---

using std::cos;
using std::sin;
using std::sqrt;

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  T s = sqrt(x.a);
  return {s, x.b / (2.0 * s)};
}
template <class T>
Dual<T> sin(const Dual<T>& x) {
  return {sin(x.a), cos(x.a) * x.b};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  return {cos(x.a), -sin(x.a) * x.b};
}

// |value| — used for pivoting and branch decisions on dual scalars.
template <class T>
double magnitude(const T& x) {
  return std::abs(value(x));
}

}  // namespace laglab
