#include "qfilab/catalog.hpp"

#include <cmath>

namespace qfi::catalog {
namespace {

template <class T>
Dual<T> lifted_eval(const ScalarField& f, std::span<const T> q) {
  auto x = lift<T>(q.first(static_cast<std::size_t>(f.dim())));
  return f(std::span<const Dual<T>>(x.data(), static_cast<std::size_t>(f.dim())));
}

template <class T>
Dual<T> lifted_scalar(const ScalarField& h, const T& s) {
  std::array<Dual<T>, 1> x{};
  x[0].v = s;
  x[0].d[0] = T(1.0);
  return h(std::span<const Dual<T>>(x.data(), 1));
}

Domain plane(std::initializer_list<Locus> loci) { return Domain(std::vector<Locus>(loci)); }

Sym2Field offdiag_tensor(const ScalarField& f) {
  auto zero = ScalarField::zero(2);
  return Sym2Field(2, {zero.with_domain(f.domain()), f, zero.with_domain(f.domain())});
}

}  // namespace

Locus origin_locus() {
  return {"r=0", [](std::span<const double> q) { return std::hypot(q[0], q[1]); }};
}

Locus axis_locus(int coordinate) {
  return {"q" + std::to_string(coordinate + 1) + "=0",
          [coordinate](std::span<const double> q) { return std::abs(q[static_cast<std::size_t>(coordinate)]); }};
}

Locus antidiagonal_locus() {
  return {"x+y=0", [](std::span<const double> q) { return std::abs(q[0] + q[1]) / std::sqrt(2.0); }};
}

Locus no_kv_locus() {
  return {"x+e^y=0", [](std::span<const double> q) {
            const double e = std::exp(q[1]);
            return std::abs(q[0] + e) / std::sqrt(1.0 + e * e);
          }};
}

MetricSpec euclidean(int n) {
  auto g = Sym2Field::generate(n, [n](int a, int b) { return ScalarField::constant(n, a == b ? 1.0 : 0.0); });
  SampleBox box{Point(static_cast<std::size_t>(n), -2.0), Point(static_cast<std::size_t>(n), 2.0)};
  return MetricSpec(n == 2 ? "E2" : "E" + std::to_string(n), std::move(g), Signature::riemannian, box);
}

MetricSpec offdiag(std::string name, ScalarField f, SampleBox box) {
  if (f.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "off-diagonal family needs f(x, y)");
  return MetricSpec(std::move(name), offdiag_tensor(f), Signature::lorentzian, std::move(box), f.domain());
}

ScalarField constant_curvature_f(double k) {
  return make_field(
      2,
      [k](auto q) {
        const auto s = q[0] + q[1];
        return k / (s * s);
      },
      plane({antidiagonal_locus()}));
}

ScalarField no_kv_f() {
  return make_field(
      2,
      [](auto q) {
        const auto e = exp(q[1]);
        return -(q[0] * q[0] * q[0]) * e * (q[0] + e);
      },
      plane({axis_locus(0), no_kv_locus()}));
}

ScalarField toda_f(double k1, double k2, double b1, double b2, double b3) {
  const double s2 = std::sqrt(2.0);
  auto value = [=](auto q) {
    return k1 * exp(s2 * (b1 * q[0] + (b2 - b1) * q[1])) + k2 * exp((b1 * q[0] + b3 * q[1]) / s2);
  };
  auto field = make_field(2, value);
  Locus zero_set{"f=0", [field](std::span<const double> q) {
                   const double v = field.value(q);
                   const double g = std::hypot(field.partial(q, 0), field.partial(q, 1));
                   return g > 0.0 ? std::abs(v) / g : std::abs(v);
                 }};
  return field.with_domain(plane({zero_set}));
}

ScalarField flat_f() {
  return make_field(2, [](auto q) { return q[0] + 0.0; }, plane({axis_locus(0)}));
}

MetricSpec constant_curvature(double k) {
  return offdiag("constant-curvature", constant_curvature_f(k), SampleBox{{0.25, 0.25}, {2.0, 2.0}});
}

MetricSpec no_kv() { return offdiag("no-kv", no_kv_f(), SampleBox{{0.5, -1.0}, {2.0, 1.0}}); }

MetricSpec toda(double k1, double k2, double b1, double b2, double b3) {
  return offdiag("toda", toda_f(k1, k2, b1, b2, b3), SampleBox{{-0.5, -0.5}, {0.5, 0.5}});
}

MetricSpec flat_lorentzian() { return offdiag("flat-lorentzian", flat_f(), SampleBox{{0.5, -1.0}, {2.0, 1.0}}); }

ScalarField newton_cotes(double k) {
  return make_field(2, [k](auto q) { return k / (q[0] * q[0] + q[1] * q[1]); }, plane({origin_locus()}));
}

ScalarField ermakov_potential(ScalarField F, double c) {
  return make_composite(
      2, F.order(),
      [F, c](auto q) {
        using T = scalar_of<decltype(q)>;
        const T ratio = q[1] / q[0];
        const T f = F(std::span<const T>(&ratio, 1));
        return f / (q[0] * q[0] + q[1] * q[1]) + 0.5 * c;
      },
      plane({origin_locus(), axis_locus(0)}));
}

ScalarField sckv_potential(ScalarField M) {
  return make_composite(
      2, M.order(),
      [M](auto q) {
        using T = scalar_of<decltype(q)>;
        const T r2 = q[0] * q[0] + q[1] * q[1];
        const T arg = q[1] / r2;
        return M(std::span<const T>(&arg, 1)) / (r2 * r2);
      },
      plane({origin_locus()}));
}

ScalarField on_coordinate(const ScalarField& h, int coordinate) {
  if (h.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "expected a one-variable field");
  return make_composite(2, h.order(), [h, coordinate](auto q) {
    using T = scalar_of<decltype(q)>;
    return h(std::span<const T>(&q[static_cast<std::size_t>(coordinate)], 1));
  });
}

Sym2Field offdiag_ckt(const ScalarField& f, const ScalarField& A1, const ScalarField& A2) {
  const int order = std::min({f.order(), A1.order(), A2.order()});
  auto comp = [&](int which) {
    return make_composite(
        2, order,
        [f, A1, A2, which](auto q) {
          using T = scalar_of<decltype(q)>;
          const T fv = f(q);
          const T a = which == 0 ? A1(std::span<const T>(&q[1], 1)) : A2(std::span<const T>(&q[0], 1));
          return fv * fv * a;
        },
        f.domain());
  };
  return Sym2Field(2, {comp(0), ScalarField::zero(2), comp(1)});
}

CovectorField offdiag_ckt_vector(const ScalarField& f, const ScalarField& A1, const ScalarField& A2) {
  const int order = std::min({f.order(), A1.order(), A2.order()}) - 1;
  std::vector<ScalarField> comps;
  for (int a = 0; a < 2; ++a) {
    auto fn = [f, A1, A2, a](auto q) {
      using T = scalar_of<decltype(q)>;
      if constexpr (std::is_same_v<T, Dual3>) {
        throw_order_exceeded(2);
        return T{};
      } else {
        const auto fj = lifted_eval<T>(f, q);
        // (f_y A1 + f A1'/2, f_x A2 + f A2'/2)
        const auto aj = a == 0 ? lifted_scalar<T>(A1, q[1]) : lifted_scalar<T>(A2, q[0]);
        const T df = a == 0 ? fj.d[1] : fj.d[0];
        return df * aj.v + 0.5 * fj.v * aj.d[0];
      }
    };
    comps.push_back(make_composite(2, order, fn, f.domain()));
  }
  return CovectorField(std::move(comps));
}

}  // namespace qfi::catalog
