#include "qfilab/symmetry.hpp"

#include <algorithm>
#include <cmath>

#include "qfilab/catalog.hpp"

namespace qfi {
namespace {

template <class T>
Vec<T> associated_vector(const kernel::MetricData<T>& md, const Rank3<T>& D) {
  Vec<T> u{};
  const int n = md.n;
  for (int a = 0; a < n; ++a) {
    T s(0.0);
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) s += md.ginv[b][c] * (D[b][c][a] + 2.0 * D[c][a][b]);
    u[a] = s / static_cast<double>(n + 2);
  }
  return u;
}

void check_match(const MetricSpec& metric, int dim, int arg_dim, const char* what) {
  if (dim != metric.dim() || arg_dim != metric.dim())
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " does not match metric dimension");
}

Vec<double> to_vec(const std::vector<double>& v) {
  Vec<double> out{};
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

}  // namespace

CkvEval ckv_residual(const MetricSpec& metric, const CovectorField& L, std::span<const double> point) {
  check_match(metric, L.dim(), L.arg_dim(), "covector");
  const auto md = kernel::metric_data<double>(metric, point);
  const auto S = kernel::symmetrize(kernel::cov_deriv(md, kernel::covector_jet<double>(L, point)), md.n);
  CkvEval out;
  out.psi = kernel::contract(md.ginv, S, md.n) / md.n;
  for (int a = 0; a < md.n; ++a)
    for (int b = 0; b < md.n; ++b) out.residual[a][b] = S[a][b] - out.psi * md.g[a][b];
  out.norm = frobenius(out.residual, md.n);
  return out;
}

Vec<double> ckt_associated_vector(const MetricSpec& metric, const Sym2Field& U, std::span<const double> point) {
  check_match(metric, U.dim(), U.arg_dim(), "tensor");
  const auto md = kernel::metric_data<double>(metric, point);
  return associated_vector(md, kernel::cov_deriv(md, kernel::sym2_jet<double>(U, point)));
}

double ckt_residual(const MetricSpec& metric, const Sym2Field& U, std::span<const double> point) {
  check_match(metric, U.dim(), U.arg_dim(), "tensor");
  const auto md = kernel::metric_data<double>(metric, point);
  const auto D = kernel::cov_deriv(md, kernel::sym2_jet<double>(U, point));
  const auto u = associated_vector(md, D);
  const auto lhs = kernel::cyclic_symmetrize(D, md.n);
  const auto rhs = kernel::symmetrized_product(u, md.g, md.n);
  Rank3<double> r{};
  for (int a = 0; a < md.n; ++a)
    for (int b = 0; b < md.n; ++b)
      for (int c = 0; c < md.n; ++c) r[a][b][c] = lhs[a][b][c] - rhs[a][b][c];
  return frobenius(r, md.n);
}

ScalarField conformal_factor_field(const MetricSpec& metric, const CovectorField& L) {
  check_match(metric, L.dim(), L.arg_dim(), "covector");
  const int order = std::min(L.order(), metric.g().order()) - 1;
  return make_derived(
      metric.dim(), order,
      [metric, L](auto q) {
        using T = scalar_of<decltype(q)>;
        const auto md = kernel::metric_data<T>(metric, q);
        const auto D = kernel::cov_deriv(md, kernel::covector_jet<T>(L, q));
        return kernel::contract(md.ginv, D, md.n) / static_cast<double>(md.n);
      },
      metric.domain().merged(L.domain()));
}

CovectorField associated_vector_field(const MetricSpec& metric, const Sym2Field& U) {
  check_match(metric, U.dim(), U.arg_dim(), "tensor");
  const int order = std::min(U.order(), metric.g().order()) - 1;
  std::vector<ScalarField> comps;
  for (int a = 0; a < metric.dim(); ++a) {
    comps.push_back(make_derived(
        metric.dim(), order,
        [metric, U, a](auto q) {
          using T = scalar_of<decltype(q)>;
          const auto md = kernel::metric_data<T>(metric, q);
          return associated_vector(md, kernel::cov_deriv(md, kernel::sym2_jet<T>(U, q)))[a];
        },
        metric.domain().merged(U.domain())));
  }
  return CovectorField(std::move(comps));
}

Sym2Field sym_cov_derivative_field(const MetricSpec& metric, const CovectorField& L) {
  check_match(metric, L.dim(), L.arg_dim(), "covector");
  const int order = std::min(L.order(), metric.g().order()) - 1;
  return Sym2Field::generate(metric.dim(), [&](int a, int b) {
    return make_derived(
        metric.dim(), order,
        [metric, L, a, b](auto q) {
          using T = scalar_of<decltype(q)>;
          const auto md = kernel::metric_data<T>(metric, q);
          const auto D = kernel::cov_deriv(md, kernel::covector_jet<T>(L, q));
          return 0.5 * (D[a][b] + D[b][a]);
        },
        metric.domain().merged(L.domain()));
  });
}

std::vector<Point> certification_points(const MetricSpec& metric, const CertifyOptions& opts) {
  return sample_points(metric.domain(), metric.box(), opts.samples, opts.seed);
}

Certificate certify_ckv_residual(const MetricSpec& metric, const CovectorField& L, const CertifyOptions& opts) {
  Certificate cert;
  for (const auto& p : sample_points(metric.domain().merged(L.domain()), metric.box(), opts.samples, opts.seed)) {
    cert.max_residual = std::max(cert.max_residual, ckv_residual(metric, L, p).norm);
    ++cert.points_sampled;
  }
  return cert;
}

Certificate certify_ckt_residual(const MetricSpec& metric, const Sym2Field& U, const CertifyOptions& opts) {
  Certificate cert;
  for (const auto& p : sample_points(metric.domain().merged(U.domain()), metric.box(), opts.samples, opts.seed)) {
    cert.max_residual = std::max(cert.max_residual, ckt_residual(metric, U, p));
    ++cert.points_sampled;
  }
  return cert;
}

SymmetryObject certify_ckv(const MetricSpec& metric, const CovectorField& L, const CertifyOptions& opts) {
  SymmetryObject obj;
  obj.kind = SymmetryKind::ckv;
  obj.metric_name = metric.name();
  obj.vector = L;
  obj.conformal_factor = conformal_factor_field(metric, L);
  obj.certificate = certify_ckv_residual(metric, L, opts);
  return obj;
}

SymmetryObject certify_ckt(const MetricSpec& metric, const Sym2Field& U, const CertifyOptions& opts) {
  SymmetryObject obj;
  obj.kind = SymmetryKind::ckt2;
  obj.metric_name = metric.name();
  obj.tensor = U;
  obj.associated_vector = associated_vector_field(metric, U);
  obj.certificate = certify_ckt_residual(metric, U, opts);
  return obj;
}

SymmetryObject ckt_from_ckvs(const MetricSpec& metric, const ScalarField& f,
                             const std::vector<CkvCatalogEntry>& ckvs,
                             const std::vector<std::vector<double>>& c, const CertifyOptions& opts) {
  for (const auto& e : ckvs)
    if (e.metric_family != metric.name())
      throw Error(ErrorCode::MixedMetric, "CKV '" + e.name + "' belongs to " + e.metric_family + ", not " +
                                              metric.name());
  const std::size_t m = ckvs.size();
  if (c.size() != m)
    throw Error(ErrorCode::DimensionMismatch, "coefficient matrix must be M x M for M CKVs");
  for (const auto& row : c)
    if (row.size() != m) throw Error(ErrorCode::DimensionMismatch, "coefficient matrix must be M x M");
  if (f.dim() != metric.dim()) throw Error(ErrorCode::DimensionMismatch, "f does not match metric dimension");

  const int n = metric.dim();
  int order = std::min(f.order(), metric.g().order());
  Domain domain = metric.domain().merged(f.domain());
  for (const auto& e : ckvs) {
    order = std::min(order, e.vector.order());
    domain = domain.merged(e.vector.domain());
  }

  // Only the upper triangle K <= L takes part.
  std::vector<std::tuple<std::size_t, std::size_t, double>> terms;
  for (std::size_t K = 0; K < m; ++K)
    for (std::size_t L = K; L < m; ++L)
      if (c[K][L] != 0.0) terms.emplace_back(K, L, c[K][L]);

  auto U = Sym2Field::generate(n, [&](int a, int b) {
    return make_composite(
        n, order,
        [metric, f, ckvs, terms, a, b](auto q) {
          using T = scalar_of<decltype(q)>;
          T s = f(q) * metric.g()(a, b)(q);
          for (const auto& [K, L, coef] : terms) {
            const auto& X = ckvs[K].vector;
            const auto& Y = ckvs[L].vector;
            s += coef * 0.5 * (X[a](q) * Y[b](q) + Y[a](q) * X[b](q));
          }
          return s;
        },
        domain);
  });

  int uorder = std::min(f.order() - 1, order);
  for (const auto& e : ckvs) uorder = std::min(uorder, e.conformal_factor.order());
  std::vector<ScalarField> ucomps;
  for (int a = 0; a < n; ++a) {
    ucomps.push_back(make_derived(
        n, uorder,
        [f, ckvs, terms, a](auto q) {
          using T = scalar_of<decltype(q)>;
          auto x = lift<T>(q);
          T s = f(std::span<const Dual<T>>(x.data(), q.size())).d[a];
          for (const auto& [K, L, coef] : terms) {
            s += coef * (ckvs[K].conformal_factor(q) * ckvs[L].vector[a](q) +
                         ckvs[L].conformal_factor(q) * ckvs[K].vector[a](q));
          }
          return s;
        },
        domain));
  }

  SymmetryObject obj;
  obj.kind = SymmetryKind::ckt2;
  obj.metric_name = metric.name();
  obj.tensor = U;
  obj.associated_vector = CovectorField(std::move(ucomps));
  // The certificate covers both the CKT equation and agreement of the
  // closed-form associated vector with the contracted one.
  for (const auto& p : sample_points(domain, metric.box(), opts.samples, opts.seed)) {
    const double r = ckt_residual(metric, U, p);
    const auto u = ckt_associated_vector(metric, U, p);
    const auto uf = to_vec(obj.associated_vector->value(p));
    double du = 0.0;
    for (int a = 0; a < n; ++a) du = std::max(du, std::abs(u[a] - uf[a]));
    obj.certificate.max_residual = std::max({obj.certificate.max_residual, r, du});
    ++obj.certificate.points_sampled;
  }
  return obj;
}

std::string_view to_string(CkvClass c) {
  switch (c) {
    case CkvClass::kv: return "KV";
    case CkvClass::hv: return "HV";
    case CkvClass::sckv: return "SCKV";
    case CkvClass::proper: return "proper CKV";
  }
  return "?";
}

CkvClass classify_ckv(const MetricSpec& metric, const CovectorField& L, const std::vector<Point>& samples,
                      double tol) {
  const auto psi = conformal_factor_field(metric, L);
  double max_abs = 0.0, spread = 0.0, hess = 0.0;
  const double psi0 = samples.empty() ? 0.0 : psi.value(samples.front());
  const auto n = static_cast<std::size_t>(metric.dim());
  for (const auto& p : samples) {
    const double v = psi.value(p);
    max_abs = std::max(max_abs, std::abs(v));
    spread = std::max(spread, std::abs(v - psi0));
    const auto md = kernel::metric_data<double>(metric, p);
    auto x = seed_as<Dual2>(p);
    const Dual2 h = psi(std::span<const Dual2>(x.data(), n));
    Mat<double> H{};
    for (int a = 0; a < md.n; ++a)
      for (int b = 0; b < md.n; ++b) {
        double s = h.d[a].d[b];
        for (int c = 0; c < md.n; ++c) s -= md.gamma[c][a][b] * h.v.d[c];
        H[a][b] = s;
      }
    hess = std::max(hess, frobenius(H, md.n));
  }
  if (max_abs <= tol) return CkvClass::kv;
  if (spread <= tol * std::max(1.0, std::abs(psi0))) return CkvClass::hv;
  if (hess <= tol) return CkvClass::sckv;
  return CkvClass::proper;
}

CktClass classify_ckt(const MetricSpec& metric, const SymmetryObject& obj, const std::vector<Point>& samples,
                      double tol) {
  CktClass out;
  if (!obj.tensor) return out;
  const auto& U = *obj.tensor;
  const auto u = obj.associated_vector ? *obj.associated_vector : associated_vector_field(metric, U);
  const auto n = static_cast<std::size_t>(metric.dim());
  double umax = 0.0, kv = 0.0, trace = 0.0, curl = 0.0;
  for (const auto& p : samples) {
    const auto md = kernel::metric_data<double>(metric, p);
    auto x = seed(p);
    const auto uj = u.eval<Dual1>(std::span<const Dual1>(x.data(), n));
    kernel::CovectorJet<double> jet;
    for (int a = 0; a < md.n; ++a) {
      jet.v[a] = uj[a].v;
      for (int c = 0; c < md.n; ++c) jet.d[a][c] = uj[a].d[c];
      umax = std::max(umax, std::abs(uj[a].v));
    }
    kv = std::max(kv, frobenius(kernel::symmetrize(kernel::cov_deriv(md, jet), md.n), md.n));
    for (int a = 0; a < md.n; ++a)
      for (int b = 0; b < md.n; ++b) curl = std::max(curl, std::abs(jet.d[a][b] - jet.d[b][a]));
    const auto Uv = U.eval<double>(p);
    Mat<double> Um{};
    for (int a = 0; a < md.n; ++a)
      for (int b = 0; b < md.n; ++b) Um[a][b] = Uv[a][b];
    trace = std::max(trace, std::abs(kernel::contract(md.ginv, Um, md.n)));
  }
  out.is_KT = umax <= tol;
  out.is_proper = !out.is_KT;
  out.is_HKT = out.is_proper && kv <= tol;
  out.is_tracefree = trace <= tol;
  out.is_gradient_type = curl <= tol;
  return out;
}

std::vector<CkvCatalogEntry> ckv_catalog(std::string_view family, const CkvFamilyParams& params) {
  std::vector<CkvCatalogEntry> out;
  auto entry = [&](std::string name, std::string fam, CovectorField v, ScalarField psi) {
    out.push_back({std::move(name), std::move(fam), std::move(v), std::move(psi)});
  };
  if (family == "E2") {
    auto vec = [](auto f0, auto f1) {
      return make_covector({make_field(2, f0), make_field(2, f1)});
    };
    auto x = [](auto q) { return q[0] + 0.0; };
    auto y = [](auto q) { return q[1] + 0.0; };
    auto zero = ScalarField::zero(2);
    entry("translation-x", "E2", make_covector({ScalarField::constant(2, 1.0), zero}), zero);
    entry("translation-y", "E2", make_covector({zero, ScalarField::constant(2, 1.0)}), zero);
    entry("rotation", "E2", vec([](auto q) { return -q[1]; }, x), zero);
    entry("homothety", "E2", vec(x, y), ScalarField::constant(2, 1.0));
    entry("B1", "E2", vec([](auto q) { return 0.5 * (q[0] * q[0] - q[1] * q[1]); },
                          [](auto q) { return q[0] * q[1]; }),
          make_field(2, x));
    entry("B2", "E2", vec([](auto q) { return q[0] * q[1]; },
                          [](auto q) { return 0.5 * (q[1] * q[1] - q[0] * q[0]); }),
          make_field(2, y));
    return out;
  }
  if (family == "constant-curvature") {
    const double k = params.k;
    if (k == 0.0) throw Error(ErrorCode::DegenerateParams, "constant-curvature family needs k != 0");
    auto dom = catalog::constant_curvature_f(k).domain();
    auto comp = [&](auto fn) {
      return make_field(
          2,
          [k, fn](auto q) {
            const auto s = q[0] + q[1];
            return k * fn(q) / (s * s);
          },
          dom);
    };
    auto zero = ScalarField::zero(2);
    entry("L1", "constant-curvature",
          make_covector({comp([](auto q) { return q[1] * q[1]; }), comp([](auto q) { return -(q[0] * q[0]); })}),
          zero);
    entry("L2", "constant-curvature",
          make_covector({comp([](auto q) { return q[1] + 0.0; }), comp([](auto q) { return q[0] + 0.0; })}), zero);
    entry("L3", "constant-curvature",
          make_covector({comp([](auto) { return 1.0; }), comp([](auto) { return -1.0; })}), zero);
    return out;
  }
  if (family == "offdiag") {
    if (!params.f || !params.F1 || !params.F2)
      throw Error(ErrorCode::BadConfig, "off-diagonal CKV family needs f, F1 and F2");
    const auto f = *params.f;
    const auto F1 = catalog::on_coordinate(*params.F1, 1);
    const auto F2 = catalog::on_coordinate(*params.F2, 0);
    const int order = std::min({f.order(), F1.order(), F2.order()});
    auto B0 = make_composite(2, order, [f, F1](auto q) { return f(q) * F1(q); }, f.domain());
    auto B1 = make_composite(2, order, [f, F2](auto q) { return f(q) * F2(q); }, f.domain());
    // psi = (F2 f_x + F1 f_y + f (F1' + F2')) / (2 f)
    auto psi = make_derived(
        2, order - 1,
        [f, F1, F2](auto q) {
          using T = scalar_of<decltype(q)>;
          auto x = lift<T>(q);
          std::span<const Dual<T>> s(x.data(), 2);
          const auto fj = f(s);
          const auto a = F1(s);
          const auto b = F2(s);
          return (b.v * fj.d[0] + a.v * fj.d[1] + fj.v * (a.d[1] + b.d[0])) / (2.0 * fj.v);
        },
        f.domain());
    entry("B", params.metric_name, make_covector({B0, B1}), psi);
    return out;
  }
  throw Error(ErrorCode::UnknownFamily, "unknown CKV family '" + std::string(family) + "'");
}

namespace {

struct Profile {
  double v, d1, d2;
};

Profile profile(const ScalarField& h, double s) {
  const double p[1] = {s};
  return {h.value(p), h.partial(p, 0), h.partial2(p, 0, 0)};
}

}  // namespace

double kv_condition_residual(const ScalarField& f, const ScalarField& F1, const ScalarField& F2,
                             std::span<const double> point) {
  const auto a = profile(F1, point[1]);
  const auto b = profile(F2, point[0]);
  return b.v * f.partial(point, 0) + a.v * f.partial(point, 1) + f.value(point) * (a.d1 + b.d1);
}

double bertrand_darboux_residual(const ScalarField& f, const ScalarField& A1, const ScalarField& A2,
                                 std::span<const double> point) {
  const auto a = profile(A1, point[1]);
  const auto b = profile(A2, point[0]);
  return f.partial2(point, 1, 1) * a.v - f.partial2(point, 0, 0) * b.v +
         1.5 * (f.partial(point, 1) * a.d1 - f.partial(point, 0) * b.d1) + 0.5 * f.value(point) * (a.d2 - b.d2);
}

double no_kv_bd_residual(const ScalarField& A1, std::span<const double> point) {
  const auto a = profile(A1, point[1]);
  return (a.v + 1.5 * a.d1 + 0.5 * a.d2) * point[0] + std::exp(point[1]) * (4.0 * a.v + 3.0 * a.d1 + 0.5 * a.d2);
}

}  // namespace qfi
