#pragma once
// Forward-mode dual numbers used as the exact derivative backend.
//
// Dual<T> carries a value and the first partials with respect to up to
// kMaxVars variables. Nesting gives higher orders: Dual<Dual<double>> holds
// second partials, Dual<Dual<Dual<double>>> third partials. Slots are
// indexed by variable number; all geometric code puts coordinate q^a in
// slot a and, where time enters, t in slot n.

#include <array>
#include <cmath>
#include <span>

namespace qfi {

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxVars = 2 * kMaxDim + 1;

template <class T>
struct Dual {
  T v{};
  std::array<T, kMaxVars> d{};

  Dual() = default;
  Dual(double c) : v(c) {}  // NOLINT: constants promote implicitly
  Dual(const T& value, const std::array<T, kMaxVars>& grad)
    requires(!std::is_same_v<T, double>)
      : v(value), d(grad) {}

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < kMaxVars; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < kMaxVars; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }
  Dual& operator+=(double c) {
    v += c;
    return *this;
  }
  Dual& operator*=(double c) {
    v *= c;
    for (auto& x : d) x *= c;
    return *this;
  }

  friend Dual operator-(const Dual& a) {
    Dual r;
    r.v = -a.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = -a.d[i];
    return r;
  }
  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r;
    r.v = a.v * b.v;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = a.v * b.d[i] + a.d[i] * b.v;
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r;
    const T inv = 1.0 / b.v;
    r.v = a.v * inv;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
  }

  friend Dual operator+(Dual a, double c) { return a += c; }
  friend Dual operator+(double c, Dual a) { return a += c; }
  friend Dual operator-(Dual a, double c) { return a += -c; }
  friend Dual operator-(double c, const Dual& a) { return -a + c; }
  friend Dual operator*(Dual a, double c) { return a *= c; }
  friend Dual operator*(double c, Dual a) { return a *= c; }
  friend Dual operator/(Dual a, double c) { return a *= 1.0 / c; }
  friend Dual operator/(double c, const Dual& b) {
    Dual r;
    const T inv = 1.0 / b.v;
    r.v = c * inv;
    for (int i = 0; i < kMaxVars; ++i) r.d[i] = -r.v * b.d[i] * inv;
    return r;
  }
};

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual1>;
using Dual3 = Dual<Dual2>;

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

/// Scalar types the field interface accepts.
template <class T>
concept FieldScalar = std::is_same_v<T, double> || std::is_same_v<T, Dual1> ||
                      std::is_same_v<T, Dual2> || std::is_same_v<T, Dual3>;

inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

// Scalar math, spelled so generic code can call exp(x) for any scalar type.
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double tan(double x) { return std::tan(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double pow(double x, double p) { return std::pow(x, p); }

template <class T>
Dual<T> exp(const Dual<T>& x) {
  Dual<T> r;
  r.v = exp(x.v);
  for (int i = 0; i < kMaxVars; ++i) r.d[i] = r.v * x.d[i];
  return r;
}
template <class T>
Dual<T> log(const Dual<T>& x) {
  Dual<T> r;
  r.v = log(x.v);
  const T inv = 1.0 / x.v;
  for (int i = 0; i < kMaxVars; ++i) r.d[i] = x.d[i] * inv;
  return r;
}
template <class T>
Dual<T> sin(const Dual<T>& x) {
  Dual<T> r;
  r.v = sin(x.v);
  const T c = cos(x.v);
  for (int i = 0; i < kMaxVars; ++i) r.d[i] = c * x.d[i];
  return r;
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  Dual<T> r;
  r.v = cos(x.v);
  const T s = -sin(x.v);
  for (int i = 0; i < kMaxVars; ++i) r.d[i] = s * x.d[i];
  return r;
}
template <class T>
Dual<T> tan(const Dual<T>& x) {
  Dual<T> r;
  r.v = tan(x.v);
  const T sec2 = 1.0 + r.v * r.v;
  for (int i = 0; i < kMaxVars; ++i) r.d[i] = sec2 * x.d[i];
  return r;
}
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  Dual<T> r;
  r.v = sqrt(x.v);
  const T half_inv = 0.5 / r.v;
  for (int i = 0; i < kMaxVars; ++i) r.d[i] = x.d[i] * half_inv;
  return r;
}
template <class T>
Dual<T> pow(const Dual<T>& x, double p) {
  Dual<T> r;
  r.v = pow(x.v, p);
  const T slope = p * pow(x.v, p - 1.0);
  for (int i = 0; i < kMaxVars; ++i) r.d[i] = slope * x.d[i];
  return r;
}

/// Integer power by repeated squaring; valid for negative bases.
template <class T>
T powi(const T& x, int p) {
  if (p < 0) return 1.0 / powi(x, -p);
  T result(1.0);
  T base = x;
  while (p > 0) {
    if (p & 1) result = result * base;
    p >>= 1;
    if (p > 0) base = base * base;
  }
  return result;
}

template <class T>
T square(const T& x) {
  return x * x;
}

/// Variables seeded in slots 0..n-1 from a double point.
inline std::array<Dual1, kMaxVars> seed(std::span<const double> p) {
  std::array<Dual1, kMaxVars> out{};
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i].v = p[i];
    out[i].d[i] = 1.0;
  }
  return out;
}

/// Lifts already-differentiable values one order up: the new outer slot c is
/// the partial with respect to component c of q. Inner derivatives of q are
/// preserved, so chain rules through q stay correct.
template <class T>
std::array<Dual<T>, kMaxVars> lift(std::span<const T> q) {
  std::array<Dual<T>, kMaxVars> out{};
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i].v = q[i];
    out[i].d[i] = T(1.0);
  }
  return out;
}

/// Seeds a double point directly at nesting depth Order (1, 2 or 3).
template <class T>
std::array<T, kMaxVars> seed_as(std::span<const double> p);

template <>
inline std::array<double, kMaxVars> seed_as<double>(std::span<const double> p) {
  std::array<double, kMaxVars> out{};
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i];
  return out;
}
template <>
inline std::array<Dual1, kMaxVars> seed_as<Dual1>(std::span<const double> p) {
  return seed(p);
}
template <>
inline std::array<Dual2, kMaxVars> seed_as<Dual2>(std::span<const double> p) {
  auto inner = seed(p);
  return lift<Dual1>(std::span<const Dual1>(inner.data(), p.size()));
}
template <>
inline std::array<Dual3, kMaxVars> seed_as<Dual3>(std::span<const double> p) {
  auto inner = seed_as<Dual2>(p);
  return lift<Dual2>(std::span<const Dual2>(inner.data(), p.size()));
}

}  // namespace qfi
