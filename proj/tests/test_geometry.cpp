#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "qfilab/catalog.hpp"
#include "qfilab/symmetry.hpp"

using namespace qfi;

namespace {

ScalarField generic_f() {
  // smooth, nonvanishing on the unit box away from the origin
  return make_field(2, [](auto q) { return 2.0 + qfi::sin(q[0]) * qfi::exp(0.3 * q[1]) + q[0] * q[0] * q[1]; });
}

std::vector<MetricSpec> builtin_metrics() {
  return {catalog::euclidean(2), catalog::euclidean(3), catalog::constant_curvature(1.0),
          catalog::constant_curvature(-2.5), catalog::no_kv(), catalog::toda(1, 1, 1, 2, 1),
          catalog::flat_lorentzian()};
}

}  // namespace

TEST_CASE("christoffel symbols of the off-diagonal family") {
  const auto f = generic_f();
  const auto metric = catalog::offdiag("generic", f, SampleBox{{0.5, 0.5}, {1.5, 1.5}});
  const std::vector<double> p{1.0, 2.0};
  const auto c = christoffel(metric, p);
  const double fv = f.value(p);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) {
        double expected = 0.0;
        if (a == 0 && b == 0 && d == 0) expected = f.partial(p, 0) / fv;
        if (a == 1 && b == 1 && d == 1) expected = f.partial(p, 1) / fv;
        CHECK(c.gamma[a][b][d] == doctest::Approx(expected).epsilon(1e-14));
      }
}

TEST_CASE("flat metric has vanishing connection") {
  const auto metric = catalog::euclidean(2);
  const std::vector<double> p{0.3, -0.7};
  const auto c = christoffel(metric, p);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) CHECK(c.gamma[a][b][d] == 0.0);
}

TEST_CASE("constant curvature connection at (1,1)") {
  const auto c = christoffel(catalog::constant_curvature(1.0), std::vector<double>{1.0, 1.0});
  CHECK(c.gamma[0][0][0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(c.gamma[1][1][1] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("singular metric is reported") {
  const auto metric = catalog::constant_curvature(1.0);
  // x + y = 0 makes f blow up; x = 0 makes the flat metric degenerate
  CHECK_THROWS_AS(christoffel(catalog::flat_lorentzian(), std::vector<double>{0.0, 0.3}), Error);
  try {
    christoffel(catalog::flat_lorentzian(), std::vector<double>{0.0, 0.3});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularMetric);
  }
}

TEST_CASE("christoffels match a finite-difference oracle on every built-in metric") {
  for (const auto& metric : builtin_metrics()) {
    CAPTURE(metric.name());
    for (const auto& p : sample_points(metric.domain(), metric.box(), 200)) {
      const auto exact = christoffel(metric, p);
      const auto fd = oracle::christoffel_fd(metric, p);
      double scale = 0.0, err = 0.0;
      for (int a = 0; a < metric.dim(); ++a)
        for (int b = 0; b < metric.dim(); ++b)
          for (int c = 0; c < metric.dim(); ++c) {
            scale = std::max(scale, std::abs(exact.gamma[a][b][c]));
            err = std::max(err, std::abs(exact.gamma[a][b][c] - fd[a][b][c]));
          }
      REQUIRE(err <= 1e-6 * std::max(scale, 1.0));
    }
  }
}

TEST_CASE("connection is symmetric and its derivative matches finite differences") {
  const auto metric = catalog::no_kv();
  const std::vector<double> p{1.2, 0.4};
  const auto c = christoffel(metric, p);
  const double h = 1e-4;
  for (int d = 0; d < 2; ++d) {
    auto pp = p, pm = p;
    pp[d] += h;
    pm[d] -= h;
    const auto cp = christoffel(metric, pp), cm = christoffel(metric, pm);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int e = 0; e < 2; ++e) {
          CHECK(c.gamma[a][b][e] == c.gamma[a][e][b]);
          const double fd = (cp.gamma[a][b][e] - cm.gamma[a][b][e]) / (2 * h);
          CHECK(c.dgamma[a][b][e][d] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
  }
}

TEST_CASE("metric compatibility on every built-in metric") {
  for (const auto& metric : builtin_metrics()) {
    CAPTURE(metric.name());
    for (const auto& p : sample_points(metric.domain(), metric.box(), 200)) {
      const auto D = cov_derivative_tensor2(metric, metric.g(), p);
      double scale = 1.0;
      for (int a = 0; a < metric.dim(); ++a)
        for (int b = 0; b < metric.dim(); ++b) scale = std::max(scale, std::abs(metric.g()(a, b).value(p)));
      REQUIRE(frobenius(D, metric.dim()) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("symmetrized covariant derivative on E2") {
  const auto metric = catalog::euclidean(2);
  const auto entries = ckv_catalog("E2");
  const auto& hv = entries[3].vector;
  const auto& b1 = entries[4].vector;
  const std::vector<double> p{2.0, 3.0};
  const auto S = sym_cov_derivative(metric, hv, p);
  CHECK(S[0][0] == 1.0);
  CHECK(S[1][1] == 1.0);
  CHECK(S[0][1] == 0.0);
  const auto B = sym_cov_derivative(metric, b1, p);
  CHECK(B[0][0] == doctest::Approx(2.0));
  CHECK(B[1][1] == doctest::Approx(2.0));
  CHECK(B[0][1] == doctest::Approx(0.0));
  const auto Z = sym_cov_derivative(catalog::no_kv(), CovectorField::zero(2, 2), std::vector<double>{1.0, 0.2});
  CHECK(frobenius(Z, 2) == 0.0);
}

TEST_CASE("covariant derivative of x times the identity on E2") {
  const auto metric = catalog::euclidean(2);
  const auto x = make_field(2, [](auto q) { return q[0] + 0.0; });
  const auto C = Sym2Field(2, {x, ScalarField::zero(2), x});
  const auto D = cov_derivative_tensor2(metric, C, std::vector<double>{0.4, -1.1});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) CHECK(D[a][b][c] == ((a == b && c == 0) ? 1.0 : 0.0));
}

TEST_CASE("covariant derivative of the off-diagonal CKT against a finite-difference oracle") {
  const auto f = catalog::no_kv_f();
  const auto metric = catalog::no_kv();
  const auto A1 = make_field(1, [](auto s) { return qfi::exp(-2.0 * s[0]); });
  const auto A2 = ScalarField::zero(1);
  const auto C = catalog::offdiag_ckt(f, A1, A2);
  const std::vector<double> p{1.0, 0.0};
  const auto D = cov_derivative_tensor2(metric, C, p);
  const auto gamma = oracle::christoffel_fd(metric, p, 1e-3, true);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        double expected =
            oracle::d1([&](const std::vector<double>& q) { return C(a, b).value(q); }, p, c);
        for (int d = 0; d < 2; ++d)
          expected -= gamma[d][a][c] * C(d, b).value(p) + gamma[d][b][c] * C(a, d).value(p);
        CHECK(D[a][b][c] == doctest::Approx(expected).epsilon(1e-7).scale(1.0));
      }
}

TEST_CASE("ricci scalar") {
  const std::vector<double> p{1.0, 0.0};
  CHECK(ricci_scalar_2d(catalog::no_kv(), p) == doctest::Approx(-0.25).epsilon(1e-13));
  CHECK(riemann_1212(catalog::no_kv(), p) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(ricci_scalar_2d(catalog::euclidean(2), p) == 0.0);
  CHECK_THROWS_AS(ricci_scalar_2d(catalog::euclidean(3), std::vector<double>{1, 2, 3}), Error);
  for (double k : {1.0, -3.0, 0.5}) {
    const auto metric = catalog::constant_curvature(k);
    double sum = 0, sum2 = 0;
    const auto pts = sample_points(metric.domain(), metric.box(), 200);
    for (const auto& q : pts) {
      const double R = ricci_scalar_2d(metric, q);
      CHECK(R == doctest::Approx(-4.0 / k).epsilon(1e-12));
      sum += R;
      sum2 += R * R;
    }
    const double mean = sum / pts.size();
    CHECK(sum2 / pts.size() - mean * mean <= 1e-18);
  }
}

TEST_CASE("ricci scalar of the off-diagonal family reproduces f_xy - f_x f_y / f") {
  const auto f = generic_f();
  const auto metric = catalog::offdiag("generic", f, SampleBox{{0.5, 0.5}, {1.5, 1.5}});
  for (const auto& p : sample_points(metric.domain(), metric.box(), 50, 7)) {
    const double fv = f.value(p);
    const double r1212 = f.partial2(p, 0, 1) - f.partial(p, 0) * f.partial(p, 1) / fv;
    CHECK(riemann_1212(metric, p) == doctest::Approx(r1212).epsilon(1e-12));
    // gamma_1212 = -f^2 and R_1212 = R/2 gamma_1212
    CHECK(ricci_scalar_2d(metric, p) == doctest::Approx(-2.0 * r1212 / (fv * fv)).epsilon(1e-12));
  }
}
