#include "qfilab/geometry.hpp"

namespace qfi {

MetricSpec::MetricSpec(std::string name, Sym2Field g, Signature hint, SampleBox box, Domain extra)
    : name_(std::move(name)), g_(std::move(g)), hint_(hint), box_(std::move(box)) {
  if (g_.dim() < 1 || g_.dim() > kMaxDim)
    throw Error(ErrorCode::DimensionMismatch, "metric dimension must be 1..3");
  if (g_.arg_dim() != g_.dim())
    throw Error(ErrorCode::DimensionMismatch, "metric components must depend on q only");
  domain_ = g_.domain().merged(extra);
}

namespace kernel {

void check_nonsingular(double det, double scale, int n) {
  const double floor = 1e-14 * std::pow(std::max(scale, 1e-300), n);
  if (!(std::abs(det) > floor)) throw Error(ErrorCode::SingularMetric, "metric determinant vanishes");
}

}  // namespace kernel

namespace {

void check_point(const MetricSpec& metric, std::span<const double> point) {
  if (static_cast<int>(point.size()) != metric.dim())
    throw Error(ErrorCode::DimensionMismatch, "point dimension differs from metric dimension");
}

}  // namespace

ConnectionEval christoffel(const MetricSpec& metric, std::span<const double> point) {
  check_point(metric, point);
  auto q = seed(point);
  const auto md = kernel::metric_data<Dual1>(metric, std::span<const Dual1>(q.data(), point.size()));
  ConnectionEval out;
  out.point.assign(point.begin(), point.end());
  out.n = md.n;
  for (int a = 0; a < md.n; ++a)
    for (int b = 0; b < md.n; ++b)
      for (int c = 0; c < md.n; ++c) {
        out.gamma[a][b][c] = md.gamma[a][b][c].v;
        for (int d = 0; d < md.n; ++d) out.dgamma[a][b][c][d] = md.gamma[a][b][c].d[d];
      }
  return out;
}

Mat<double> sym_cov_derivative(const MetricSpec& metric, const CovectorField& L,
                               std::span<const double> point) {
  check_point(metric, point);
  if (L.dim() != metric.dim() || L.arg_dim() != metric.dim())
    throw Error(ErrorCode::DimensionMismatch, "covector does not match metric dimension");
  const auto md = kernel::metric_data<double>(metric, point);
  const auto jet = kernel::covector_jet<double>(L, point);
  return kernel::symmetrize(kernel::cov_deriv(md, jet), md.n);
}

Rank3<double> cov_derivative_tensor2(const MetricSpec& metric, const Sym2Field& C,
                                     std::span<const double> point) {
  check_point(metric, point);
  if (C.dim() != metric.dim() || C.arg_dim() != metric.dim())
    throw Error(ErrorCode::DimensionMismatch, "tensor does not match metric dimension");
  const auto md = kernel::metric_data<double>(metric, point);
  return kernel::cov_deriv(md, kernel::sym2_jet<double>(C, point));
}

double riemann_1212(const MetricSpec& metric, std::span<const double> point) {
  if (metric.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "curvature is implemented for n = 2");
  check_point(metric, point);
  return kernel::riemann_1212<double>(metric, point);
}

double ricci_scalar_2d(const MetricSpec& metric, std::span<const double> point) {
  const double r1212 = riemann_1212(metric, point);
  const auto g = metric.g().eval<double>(point);
  return 2.0 * r1212 / (g[0][0] * g[1][1] - g[0][1] * g[1][0]);
}

double frobenius(const Mat<double>& m, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) s += m[a][b] * m[a][b];
  return std::sqrt(s);
}

double frobenius(const Rank3<double>& m, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) s += m[a][b][c] * m[a][b][c];
  return std::sqrt(s);
}

double norm(const Vec<double>& v, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) s += v[a] * v[a];
  return std::sqrt(s);
}

}  // namespace qfi
