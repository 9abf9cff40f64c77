#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qfilab/catalog.hpp"
#include "qfilab/symmetry.hpp"

using namespace qfi;

namespace {

ScalarField one_var(double a, double b, double c) {
  return make_field(1, [a, b, c](auto s) { return a * s[0] * s[0] + b * s[0] + c; });
}

const CkvCatalogEntry& find(const std::vector<CkvCatalogEntry>& v, const std::string& name) {
  for (const auto& e : v)
    if (e.name == name) return e;
  throw std::runtime_error("missing " + name);
}

}  // namespace

TEST_CASE("conformal factors of the flat-space vectors") {
  const auto metric = catalog::euclidean(2);
  const auto e2 = ckv_catalog("E2");
  const std::vector<double> p{0.7, -1.3};
  auto hv = ckv_residual(metric, find(e2, "homothety").vector, p);
  CHECK(hv.psi == 1.0);
  CHECK(hv.norm == 0.0);
  auto b2 = ckv_residual(metric, find(e2, "B2").vector, p);
  CHECK(b2.psi == doctest::Approx(p[1]));
  CHECK(b2.norm <= 1e-15);
  auto b1 = ckv_residual(metric, find(e2, "B1").vector, p);
  CHECK(b1.psi == doctest::Approx(p[0]));
}

TEST_CASE("constant curvature KVs have zero conformal factor") {
  const auto metric = catalog::constant_curvature(1.0);
  for (const auto& e : ckv_catalog("constant-curvature")) {
    CAPTURE(e.name);
    for (const auto& p : sample_points(metric.domain(), metric.box(), 30)) {
      const auto r = ckv_residual(metric, e.vector, p);
      CHECK(std::abs(r.psi) <= 1e-12);
      CHECK(r.norm <= 1e-12);
    }
  }
}

TEST_CASE("every catalog entry certifies and its stated factor matches the computed one") {
  struct Case {
    MetricSpec metric;
    std::vector<CkvCatalogEntry> entries;
  };
  const double k = 1.0;
  CkvFamilyParams curv;
  curv.k = k;
  CkvFamilyParams off;
  off.f = catalog::constant_curvature_f(k);
  off.F1 = one_var(1.0, 0.5, 0.25);
  off.F2 = one_var(-1.0, 0.5, -0.25);
  off.metric_name = "constant-curvature";
  CkvFamilyParams nokv;
  nokv.f = catalog::no_kv_f();
  nokv.F1 = one_var(0.3, -1.0, 2.0);
  nokv.F2 = make_field(1, [](auto s) { return qfi::sin(s[0]); });
  nokv.metric_name = "no-kv";
  std::vector<Case> cases{{catalog::euclidean(2), ckv_catalog("E2")},
                          {catalog::constant_curvature(k), ckv_catalog("constant-curvature", curv)},
                          {catalog::constant_curvature(k), ckv_catalog("offdiag", off)},
                          {catalog::no_kv(), ckv_catalog("offdiag", nokv)}};
  for (const auto& c : cases) {
    for (const auto& e : c.entries) {
      CAPTURE(e.name);
      CAPTURE(c.metric.name());
      const auto cert = certify_ckv_residual(c.metric, e.vector);
      CHECK(cert.points_sampled == 200);
      CHECK(cert.max_residual <= 1e-10);
      for (const auto& p : sample_points(c.metric.domain(), c.metric.box(), 40, 3))
        CHECK(ckv_residual(c.metric, e.vector, p).psi ==
              doctest::Approx(e.conformal_factor.value(p)).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("KV filter on E2 keeps exactly the isometries") {
  const auto metric = catalog::euclidean(2);
  const auto pts = sample_points(metric.domain(), metric.box(), 50);
  std::vector<std::string> kvs;
  for (const auto& e : ckv_catalog("E2"))
    if (classify_ckv(metric, e.vector, pts) == CkvClass::kv) kvs.push_back(e.name);
  CHECK(kvs == std::vector<std::string>{"translation-x", "translation-y", "rotation"});
  CHECK(classify_ckv(metric, find(ckv_catalog("E2"), "homothety").vector, pts) == CkvClass::hv);
  CHECK(classify_ckv(metric, find(ckv_catalog("E2"), "B1").vector, pts) == CkvClass::sckv);
  CHECK(classify_ckv(metric, find(ckv_catalog("E2"), "B2").vector, pts) == CkvClass::sckv);
}

TEST_CASE("proper CKV of the off-diagonal family") {
  CkvFamilyParams p;
  p.f = catalog::no_kv_f();
  p.F1 = one_var(0.0, 1.0, 0.0);
  p.F2 = one_var(1.0, 0.0, 0.0);
  p.metric_name = "no-kv";
  const auto metric = catalog::no_kv();
  const auto pts = sample_points(metric.domain(), metric.box(), 20);
  CHECK(classify_ckv(metric, ckv_catalog("offdiag", p)[0].vector, pts) == CkvClass::proper);
}

TEST_CASE("unknown family") {
  try {
    ckv_catalog("S2");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownFamily);
  }
}

TEST_CASE("associated vectors") {
  const auto e2 = catalog::euclidean(2);
  const std::vector<double> p{0.8, 0.6};
  const auto fx = make_field(2, [](auto q) { return q[0] * q[0] * q[1]; });
  const auto U = Sym2Field(2, {fx, ScalarField::zero(2), fx});
  const auto u = ckt_associated_vector(e2, U, p);
  CHECK(u[0] == doctest::Approx(2 * p[0] * p[1]));
  CHECK(u[1] == doctest::Approx(p[0] * p[0]));
  CHECK(ckt_residual(e2, U, p) <= 1e-14);
  const auto delta = e2.g();
  const auto z = ckt_associated_vector(e2, delta, p);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);

  // f g on a curved metric: u = grad f
  const auto metric = catalog::no_kv();
  const auto h = make_field(2, [](auto q) { return qfi::sin(q[0]) * q[1]; });
  const auto fg = Sym2Field::generate(2, [&](int a, int b) {
    return make_composite(2, 3, [h, g = metric.g()(a, b)](auto q) { return h(q) * g(q); });
  });
  const std::vector<double> p2{1.3, -0.4};
  const auto v = ckt_associated_vector(metric, fg, p2);
  CHECK(v[0] == doctest::Approx(h.partial(p2, 0)).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(h.partial(p2, 1)).epsilon(1e-12));
  CHECK(ckt_residual(metric, fg, p2) <= 1e-10);
  CHECK(ckt_residual(metric, metric.g(), p2) <= 1e-10);
}

TEST_CASE("off-diagonal CKT and its associated vector") {
  const auto f = make_field(2, [](auto q) { return 2.0 + q[0] * q[1] + qfi::exp(0.2 * q[0]); });
  const auto metric = catalog::offdiag("generic", f, SampleBox{{0.2, 0.2}, {1.5, 1.5}});
  const auto A1 = make_field(1, [](auto s) { return s[0] + 0.0; });
  const auto A2 = make_field(1, [](auto s) { return s[0] * s[0]; });
  const auto C = catalog::offdiag_ckt(f, A1, A2);
  const auto X = catalog::offdiag_ckt_vector(f, A1, A2);
  for (const auto& p : sample_points(metric.domain(), metric.box(), 50)) {
    CHECK(ckt_residual(metric, C, p) <= 1e-10);
    const auto u = ckt_associated_vector(metric, C, p);
    const auto x = X.value(p);
    CHECK(u[0] == doctest::Approx(x[0]).epsilon(1e-11));
    CHECK(u[1] == doctest::Approx(x[1]).epsilon(1e-11));
  }
}

TEST_CASE("CKT residual cross-checked with finite-difference covariant derivatives") {
  const auto f = make_field(2, [](auto q) { return 2.0 + q[0] * q[1] + qfi::exp(0.2 * q[0]); });
  const auto metric = catalog::offdiag("generic", f, SampleBox{{0.2, 0.2}, {1.5, 1.5}});
  const auto A1 = make_field(1, [](auto s) { return s[0] + 0.0; });
  const auto A2 = make_field(1, [](auto s) { return s[0] * s[0]; });
  const auto C = catalog::offdiag_ckt(f, A1, A2);
  const auto X = catalog::offdiag_ckt_vector(f, A1, A2);
  for (const auto& p : sample_points(metric.domain(), metric.box(), 50, 11)) {
    const auto gamma = oracle::christoffel_fd(metric, p, 1e-3, true);
    Rank3<double> D{};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          double s = oracle::d1([&](const std::vector<double>& q) { return C(a, b).value(q); }, p, c);
          for (int d = 0; d < 2; ++d) s -= gamma[d][a][c] * C(d, b).value(p) + gamma[d][b][c] * C(a, d).value(p);
          D[a][b][c] = s;
        }
    const auto x = X.value(p);
    double worst = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          const double lhs = (D[a][b][c] + D[b][c][a] + D[c][a][b]) / 3.0;
          const double rhs = (x[a] * f.value(p) * (b != c) + x[b] * f.value(p) * (c != a) +
                              x[c] * f.value(p) * (a != b)) / 3.0;
          worst = std::max(worst, std::abs(lhs - rhs));
        }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("CKTs built from CKVs") {
  const auto metric = catalog::euclidean(2);
  const auto e2 = ckv_catalog("E2");
  SUBCASE("single CKV squared") {
    const std::vector<CkvCatalogEntry> one{find(e2, "B1")};
    const auto obj = ckt_from_ckvs(metric, ScalarField::zero(2), one, {{1.0}});
    CHECK(obj.certified(1e-10));
    const std::vector<double> p{0.9, -0.4};
    const auto L = one[0].vector.value(p);
    const auto U = obj.tensor->value(p);
    CHECK(U[0][1] == doctest::Approx(L[0] * L[1]));
    const auto u = obj.associated_vector->value(p);
    CHECK(u[0] == doctest::Approx(2 * p[0] * L[0]));
    CHECK(u[1] == doctest::Approx(2 * p[0] * L[1]));
  }
  SUBCASE("pure gradient part") {
    const auto f = make_field(2, [](auto q) { return q[0] + 0.0; });
    const auto obj = ckt_from_ckvs(metric, f, {}, {});
    CHECK(obj.certified(1e-10));
    const auto cls = classify_ckt(metric, obj, sample_points(metric.domain(), metric.box(), 30));
    CHECK(cls.is_gradient_type);
    CHECK(cls.is_proper);
    // U - u g vanishes and is trivially a KT
    const auto rest = Sym2Field::generate(2, [&](int a, int b) {
      return make_composite(2, 3, [U = (*obj.tensor)(a, b), f, g = metric.g()(a, b)](auto q) {
        return U(q) - f(q) * g(q);
      });
    });
    for (const auto& p : sample_points(metric.domain(), metric.box(), 30)) {
      const auto u = ckt_associated_vector(metric, rest, p);
      CHECK(norm(u, 2) <= 1e-12);
    }
  }
  SUBCASE("zero") {
    const auto obj = ckt_from_ckvs(metric, ScalarField::zero(2), e2, std::vector<std::vector<double>>(6, std::vector<double>(6, 0.0)));
    const std::vector<double> p{0.5, 0.5};
    CHECK(frobenius(Mat<double>{}, 2) == 0.0);
    CHECK(obj.tensor->value(p)[0][0] == 0.0);
    CHECK(obj.associated_vector->value(p)[1] == 0.0);
  }
  SUBCASE("random combinations always certify") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<std::vector<double>> c(6, std::vector<double>(6, 0.0));
      for (int i = 0; i < 6; ++i)
        for (int j = i; j < 6; ++j) c[i][j] = u(rng);
      const double a = u(rng), b = u(rng);
      const auto f = make_field(2, [a, b](auto q) { return a * qfi::sin(q[0]) + b * q[0] * q[1] * q[1]; });
      CHECK(ckt_from_ckvs(metric, f, e2, c).certified(1e-10));
    }
  }
  SUBCASE("mixed metrics") {
    std::vector<CkvCatalogEntry> mixed{e2[0], ckv_catalog("constant-curvature")[0]};
    try {
      ckt_from_ckvs(metric, ScalarField::zero(2), mixed, {{1, 0}, {0, 1}});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MixedMetric);
    }
  }
}

TEST_CASE("CKTs from the constant-curvature KVs certify") {
  const auto metric = catalog::constant_curvature(1.0);
  const auto kvs = ckv_catalog("constant-curvature");
  const auto f = make_field(2, [](auto q) { return q[0] * q[1]; });
  const auto obj = ckt_from_ckvs(metric, f, kvs, {{1, 0.5, 0}, {0, -2, 1}, {0, 0, 0.3}});
  CHECK(obj.certificate.points_sampled == 200);
  CHECK(obj.certified(1e-10));
}

TEST_CASE("linearity of the CKT residual expression") {
  const auto metric = catalog::no_kv();
  const auto A1 = make_field(1, [](auto s) { return qfi::exp(-2.0 * s[0]); });
  const auto T1 = catalog::offdiag_ckt(catalog::no_kv_f(), A1, ScalarField::zero(1));
  const auto T2 = Sym2Field(2, {make_field(2, [](auto q) { return q[0] * q[1]; }), ScalarField::zero(2),
                                make_field(2, [](auto q) { return qfi::sin(q[1]); })});
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  // residual tensor R(T) = T_(ab;c) - u_(a g_bc) is linear; compare the combination componentwise
  auto residual = [&](const Sym2Field& T, const std::vector<double>& p) {
    const auto md = kernel::metric_data<double>(metric, p);
    const auto D = cov_derivative_tensor2(metric, T, p);
    const auto uu = ckt_associated_vector(metric, T, p);
    auto lhs = kernel::cyclic_symmetrize(D, 2);
    const auto rhs = kernel::symmetrized_product(uu, md.g, 2);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) lhs[a][b][c] -= rhs[a][b][c];
    return lhs;
  };
  for (int trial = 0; trial < 10; ++trial) {
    const double lam = u(rng), mu = u(rng);
    const auto comb = Sym2Field::generate(2, [&](int a, int b) {
      return make_composite(2, 3, [x = T1(a, b), y = T2(a, b), lam, mu](auto q) { return lam * x(q) + mu * y(q); });
    });
    const std::vector<double> p{0.6 + 0.1 * trial, -0.5 + 0.1 * trial};
    const auto r = residual(comb, p), r1 = residual(T1, p), r2 = residual(T2, p);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          CHECK(r[a][b][c] == doctest::Approx(lam * r1[a][b][c] + mu * r2[a][b][c]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("gradient-type CKT minus u g has vanishing associated vector") {
  const auto metric = catalog::constant_curvature(2.0);
  const auto kvs = ckv_catalog("constant-curvature", CkvFamilyParams{2.0});
  const auto f = make_field(2, [](auto q) { return q[0] * q[0] - q[1]; });
  const auto obj = ckt_from_ckvs(metric, f, kvs, {{1, 0, 0}, {0, 0, 0}, {0, 0, 1}});
  const auto pts = sample_points(metric.domain(), metric.box(), 200);
  const auto cls = classify_ckt(metric, obj, pts);
  REQUIRE(cls.is_gradient_type);
  const auto C = Sym2Field::generate(2, [&](int a, int b) {
    return make_composite(2, 3, [U = (*obj.tensor)(a, b), f, g = metric.g()(a, b)](auto q) { return U(q) - f(q) * g(q); });
  });
  for (const auto& p : pts) CHECK(norm(ckt_associated_vector(metric, C, p), 2) <= 1e-10);
}

TEST_CASE("classification flags") {
  const auto e2 = catalog::euclidean(2);
  const auto pts = sample_points(e2.domain(), e2.box(), 30);
  const auto delta = certify_ckt(e2, e2.g());
  const auto d = classify_ckt(e2, delta, pts);
  CHECK(d.is_KT);
  CHECK_FALSE(d.is_proper);
  CHECK_FALSE(d.is_tracefree);

  const auto metric = catalog::no_kv();
  const auto A1 = make_field(1, [](auto s) { return qfi::exp(-2.0 * s[0]); });
  const auto obj = certify_ckt(metric, catalog::offdiag_ckt(catalog::no_kv_f(), A1, ScalarField::zero(1)));
  CHECK(obj.certified(1e-10));
  const auto c = classify_ckt(metric, obj, sample_points(metric.domain(), metric.box(), 30));
  CHECK(c.is_proper);
  CHECK(c.is_gradient_type);  // X = (-x^3, 0)

  // B1 B1 has u = 2 x B1, not a KV
  const auto sq = ckt_from_ckvs(e2, ScalarField::zero(2), {find(ckv_catalog("E2"), "B1")}, {{1.0}});
  const auto s = classify_ckt(e2, sq, pts);
  CHECK(s.is_proper);
  CHECK_FALSE(s.is_HKT);
  // translation x homothety: u = psi_H T = T, a KV, so HKT
  const auto th = ckt_from_ckvs(e2, ScalarField::zero(2), {find(ckv_catalog("E2"), "translation-x"),
                                                          find(ckv_catalog("E2"), "homothety")},
                                {{0, 1}, {0, 0}});
  const auto h = classify_ckt(e2, th, pts);
  CHECK(h.is_HKT);
  CHECK(h.is_gradient_type);
}

TEST_CASE("KV condition of the off-diagonal family") {
  const auto f = catalog::constant_curvature_f(1.7);
  for (double c1 : {1.0, -0.5})
    for (double c2 : {0.0, 2.0})
      for (double c3 : {0.3, -1.0}) {
        const auto F1 = one_var(c1, c2, c3);
        const auto F2 = one_var(-c1, c2, -c3);
        for (const auto& p : sample_points(f.domain(), SampleBox{{0.2, 0.2}, {2, 2}}, 20))
          CHECK(std::abs(kv_condition_residual(f, F1, F2, p)) <= 1e-10);
      }
  const auto z = ScalarField::zero(1);
  CHECK(kv_condition_residual(catalog::no_kv_f(), z, z, std::vector<double>{1.0, 0.5}) == 0.0);
}

TEST_CASE("no polynomial F1, F2 of degree <= 2 gives a KV of the no-KV metric") {
  // The KV condition is linear in the six coefficients of F1, F2; a full
  // rank sample matrix means only the trivial solution.
  const auto f = catalog::no_kv_f();
  const auto metric = catalog::no_kv();
  const auto pts = sample_points(metric.domain(), metric.box(), 40);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), 6);
  for (int j = 0; j < 6; ++j) {
    const auto F1 = j < 3 ? one_var(j == 0, j == 1, j == 2) : ScalarField::zero(1);
    const auto F2 = j >= 3 ? one_var(j == 3, j == 4, j == 5) : ScalarField::zero(1);
    for (std::size_t i = 0; i < pts.size(); ++i)
      A(static_cast<Eigen::Index>(i), j) = kv_condition_residual(f, F1, F2, pts[i]);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto s = svd.singularValues();
  CHECK(s(5) / s(0) > 1e-8);
}

TEST_CASE("Bertrand-Darboux residuals") {
  const auto metric = catalog::no_kv();
  const auto A1 = make_field(1, [](auto s) { return qfi::exp(-2.0 * s[0]); });
  const auto z = ScalarField::zero(1);
  for (const auto& p : sample_points(metric.domain(), metric.box(), 200)) {
    CHECK(std::abs(no_kv_bd_residual(A1, p)) <= 1e-12);
    CHECK(std::abs(bertrand_darboux_residual(catalog::no_kv_f(), A1, z, p)) <= 1e-10);
    // the closed form is the general PDE divided by -x^3 e^y
    const double scale = -p[0] * p[0] * p[0] * std::exp(p[1]);
    const auto B = make_field(1, [](auto s) { return qfi::sin(s[0]) + s[0] * s[0]; });
    CHECK(bertrand_darboux_residual(catalog::no_kv_f(), B, z, p) ==
          doctest::Approx(scale * no_kv_bd_residual(B, p)).epsilon(1e-11));
  }
  const double b1 = 1.0, b2 = 2.0, b3 = 1.0;
  const auto tf = catalog::toda_f(1.0, 1.0, b1, b2, b3);
  const auto A2 = make_field(1, [b1](auto s) { return qfi::exp(-std::sqrt(2.0) * b1 * s[0]); });
  const auto toda = catalog::toda(1, 1, b1, b2, b3);
  for (const auto& p : sample_points(toda.domain(), toda.box(), 200))
    CHECK(std::abs(bertrand_darboux_residual(tf, z, A2, p)) <= 1e-10);
}
