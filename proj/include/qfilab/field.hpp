#pragma once
// Differentiable fields on R^n.
//
// A ScalarField can be evaluated at any FieldScalar type up to its order:
// order 3 fields (closed forms, parsed expressions) accept Dual3 and so
// expose exact partials up to third order. Fields that differentiate other
// fields internally (covariant derivatives, associated vectors) lose one
// order per derivative they take.

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qfilab/dual.hpp"
#include "qfilab/error.hpp"

namespace qfi {

using Point = std::vector<double>;

/// An excluded set {distance == 0} together with a distance estimate.
struct Locus {
  std::string name;
  std::function<double(std::span<const double>)> distance;
};

class Domain {
 public:
  Domain() = default;
  explicit Domain(std::vector<Locus> loci) : loci_(std::move(loci)) {}

  void exclude(Locus locus);
  /// Distance to the nearest excluded locus, +inf when nothing is excluded.
  double margin(std::span<const double> q) const;
  bool admits(std::span<const double> q, double min_distance) const {
    return margin(q) >= min_distance;
  }
  Domain merged(const Domain& other) const;
  const std::vector<Locus>& loci() const { return loci_; }

 private:
  std::vector<Locus> loci_;
};

class ScalarField {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    virtual double eval(std::span<const double> q) const = 0;
    virtual Dual1 eval(std::span<const Dual1> q) const = 0;
    virtual Dual2 eval(std::span<const Dual2> q) const = 0;
    virtual Dual3 eval(std::span<const Dual3> q) const = 0;
  };

  ScalarField(int dim, std::shared_ptr<const Impl> impl, int order, Domain domain = {})
      : dim_(dim), order_(order), impl_(std::move(impl)), domain_(std::move(domain)) {}

  int dim() const { return dim_; }
  /// Highest derivative order available through evaluation.
  int order() const { return order_; }
  const Domain& domain() const { return domain_; }

  template <FieldScalar T>
  T operator()(std::span<const T> q) const {
    return impl_->eval(q);
  }
  template <FieldScalar T>
  T operator()(const std::array<T, kMaxVars>& q) const {
    return impl_->eval(std::span<const T>(q.data(), static_cast<std::size_t>(dim_)));
  }

  double value(std::span<const double> q) const { return impl_->eval(q); }
  double partial(std::span<const double> q, int i) const;
  double partial2(std::span<const double> q, int i, int j) const;

  ScalarField with_domain(Domain domain) const {
    ScalarField copy = *this;
    copy.domain_ = std::move(domain);
    return copy;
  }

  static ScalarField constant(int dim, double c);
  static ScalarField zero(int dim) { return constant(dim, 0.0); }

 private:
  int dim_;
  int order_;
  std::shared_ptr<const Impl> impl_;
  Domain domain_;
};

[[noreturn]] void throw_order_exceeded(int order);

/// Wraps a generic callable `f(std::span<const T>) -> T`. Evaluation above
/// Order throws DerivativeOrderExceeded without instantiating f.
template <int Order, class F>
class LambdaField final : public ScalarField::Impl {
 public:
  explicit LambdaField(F f) : f_(std::move(f)) {}

  double eval(std::span<const double> q) const override { return f_(q); }
  Dual1 eval(std::span<const Dual1> q) const override {
    if constexpr (Order >= 1) {
      return f_(q);
    } else {
      throw_order_exceeded(Order);
    }
  }
  Dual2 eval(std::span<const Dual2> q) const override {
    if constexpr (Order >= 2) {
      return f_(q);
    } else {
      throw_order_exceeded(Order);
    }
  }
  Dual3 eval(std::span<const Dual3> q) const override {
    if constexpr (Order >= 3) {
      return f_(q);
    } else {
      throw_order_exceeded(Order);
    }
  }

 private:
  F f_;
};

template <int Order = 3, class F>
ScalarField make_field(int dim, F f, Domain domain = {}) {
  return ScalarField(dim, std::make_shared<LambdaField<Order, F>>(std::move(f)), Order,
                     std::move(domain));
}

/// A field assembled from other fields; `order` is the lowest order among
/// its ingredients and evaluation above it throws from the ingredient.
template <class F>
ScalarField make_composite(int dim, int order, F f, Domain domain = {}) {
  return ScalarField(dim, std::make_shared<LambdaField<3, F>>(std::move(f)), order, std::move(domain));
}

/// Like make_composite for callables that differentiate their ingredients
/// once internally: they are never instantiated at Dual3.
template <class F>
ScalarField make_derived(int dim, int order, F f, Domain domain = {}) {
  auto guarded = [f = std::move(f)](auto q) {
    using T = std::remove_cvref_t<typename decltype(q)::value_type>;
    if constexpr (std::is_same_v<T, Dual3>) {
      throw_order_exceeded(2);
      return T{};
    } else {
      return f(q);
    }
  };
  return make_composite(dim, order, std::move(guarded), std::move(domain));
}

/// Scalar type of a span handed to a field lambda.
template <class S>
using scalar_of = std::remove_cvref_t<typename std::remove_cvref_t<S>::value_type>;

class CovectorField {
 public:
  explicit CovectorField(std::vector<ScalarField> components);

  int dim() const { return static_cast<int>(comps_.size()); }
  /// Dimension of the argument (n, or n + 1 for time-dependent fields).
  int arg_dim() const { return comps_.front().dim(); }
  int order() const;
  Domain domain() const;
  const ScalarField& operator[](int a) const { return comps_[static_cast<std::size_t>(a)]; }

  template <FieldScalar T>
  std::array<T, kMaxDim> eval(std::span<const T> q) const {
    std::array<T, kMaxDim> out{};
    for (int a = 0; a < dim(); ++a) out[a] = comps_[a](q);
    return out;
  }
  std::vector<double> value(std::span<const double> q) const;

  static CovectorField zero(int n, int arg_dim);

 private:
  std::vector<ScalarField> comps_;
};

/// Symmetric 2-tensor with covariant components; stored as the full n x n
/// grid of shared component handles.
class Sym2Field {
 public:
  Sym2Field(int n, std::vector<ScalarField> upper);  // row-major upper triangle

  int dim() const { return n_; }
  int arg_dim() const { return comps_.front().dim(); }
  int order() const;
  Domain domain() const;
  const ScalarField& operator()(int a, int b) const {
    return comps_[static_cast<std::size_t>(a * n_ + b)];
  }

  template <FieldScalar T>
  std::array<std::array<T, kMaxDim>, kMaxDim> eval(std::span<const T> q) const {
    std::array<std::array<T, kMaxDim>, kMaxDim> out{};
    for (int a = 0; a < n_; ++a) {
      for (int b = a; b < n_; ++b) {
        out[a][b] = (*this)(a, b)(q);
        if (b != a) out[b][a] = out[a][b];
      }
    }
    return out;
  }
  std::vector<std::vector<double>> value(std::span<const double> q) const;

  static Sym2Field zero(int n, int arg_dim);
  /// Builds from a callable (a, b) -> ScalarField, invoked for a <= b.
  template <class Fn>
  static Sym2Field generate(int n, Fn&& fn) {
    std::vector<ScalarField> upper;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) upper.push_back(fn(a, b));
    return Sym2Field(n, std::move(upper));
  }

 private:
  int n_;
  std::vector<ScalarField> comps_;
};

inline CovectorField make_covector(std::vector<ScalarField> comps) {
  return CovectorField(std::move(comps));
}

/// Builds a covector whose components come from one generic callable
/// returning std::array<T, kMaxDim>; the callable runs once per component.
template <int Order, class F>
CovectorField make_covector_from(int n, int arg_dim, F f, Domain domain = {}) {
  std::vector<ScalarField> comps;
  for (int a = 0; a < n; ++a) {
    comps.push_back(make_field<Order>(
        arg_dim, [f, a](auto q) { return f(q)[static_cast<std::size_t>(a)]; }, domain));
  }
  return CovectorField(std::move(comps));
}

/// Same for symmetric tensors; f returns a kMaxDim x kMaxDim array.
template <int Order, class F>
Sym2Field make_sym2_from(int n, int arg_dim, F f, Domain domain = {}) {
  return Sym2Field::generate(n, [&](int a, int b) {
    return make_field<Order>(
        arg_dim,
        [f, a, b](auto q) { return f(q)[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]; },
        domain);
  });
}

}  // namespace qfi
