#include "qfilab/qfi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qfilab/quadrature.hpp"

namespace qfi {

double ConstrainedSystem::hamiltonian(std::span<const double> q, std::span<const double> qd) const {
  const auto g = metric.g().eval<double>(q);
  double kin = 0.0;
  for (int a = 0; a < dim(); ++a)
    for (int b = 0; b < dim(); ++b) kin += g[a][b] * qd[a] * qd[b];
  return 0.5 * kin + V.value(q);
}

std::string_view to_string(QfiFamily f) {
  switch (f) {
    case QfiFamily::integral1: return "integral1";
    case QfiFamily::integral2: return "integral2";
    case QfiFamily::integral3: return "integral3";
    case QfiFamily::J1: return "J1";
    case QfiFamily::J2: return "J2";
    case QfiFamily::geodesic_P1: return "geodesic-P1";
    case QfiFamily::geodesic_P2: return "geodesic-P2";
  }
  return "?";
}

namespace {

template <class T>
struct Coeffs {
  Mat<T> Kab{};
  Vec<T> Ka{};
  T K{};
};

template <class T>
T dot(const Vec<T>& a, const Vec<T>& b, int n) {
  T s(0.0);
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <class T>
Vec<T> grad_of(const kernel::ScalarJet<T>& j) {
  Vec<T> out{};
  for (int a = 0; a < kMaxDim; ++a) out[a] = j.d[a];
  return out;
}

// Quantities of the constraint surface at q.
template <class T>
struct Background {
  kernel::MetricData<T> md;
  T V;
  Vec<T> dV{};  // V_,a
  Vec<T> Vup{};  // V^,a
};

template <class T>
Background<T> background(const ConstrainedSystem& sys, std::span<const T> q) {
  Background<T> b;
  b.md = kernel::metric_data<T>(sys.metric, q);
  const auto vj = kernel::scalar_jet<T>(sys.V, q);
  b.V = vj.v;
  b.dV = grad_of(vj);
  b.Vup = kernel::raise(b.md, b.dV);
  return b;
}

template <class T>
Mat<T> sym_deriv(const kernel::MetricData<T>& md, const CovectorField& L, std::span<const T> q) {
  return kernel::symmetrize(kernel::cov_deriv(md, kernel::covector_jet<T>(L, q)), md.n);
}

}  // namespace

struct QfiSpec::Data {
  explicit Data(ConstrainedSystem s) : sys(std::move(s)) {}

  ConstrainedSystem sys;
  QfiFamily family = QfiFamily::integral1;
  QfiFamily formula = QfiFamily::integral1;  // which coefficient formula applies
  int ell = 0;
  double lambda = 0.0;
  double c = 0.0;
  std::optional<Sym2Field> C0;
  std::optional<CovectorField> X0;
  std::vector<CovectorField> Ls;
  std::vector<CovectorField> Ys;
  std::optional<ScalarField> G;
  std::vector<ConditionResidual> residuals;

  template <class T>
  Coeffs<T> at(std::span<const T> x) const {
    const int n = sys.dim();
    const auto q = x.first(static_cast<std::size_t>(n));
    const T t = x[static_cast<std::size_t>(n)];
    Coeffs<T> out;
    auto add_L = [&](const CovectorField& L, const T& wa) {
      const auto v = L.eval<T>(q);
      for (int a = 0; a < n; ++a) out.Ka[a] += wa * v[a];
    };
    switch (formula) {
      case QfiFamily::J1: {
        const auto C = C0->eval<T>(q);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) out.Kab[a][b] = C[a][b];
        out.K = (*G)(q);
        break;
      }
      case QfiFamily::J2:
        add_L(Ls.front(), T(1.0));
        out.K = c * t;
        break;
      case QfiFamily::integral1: {
        const auto C = C0->eval<T>(q);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) out.Kab[a][b] = C[a][b];
        out.K = (*G)(q);
        if (ell > 0) {
          const auto bg = background<T>(sys, q);
          for (int k = 1; k <= ell; ++k) {
            const auto& L = Ls[static_cast<std::size_t>(k - 1)];
            const T w = powi(t, 2 * k) / (2.0 * k);
            const auto S = sym_deriv(bg.md, L, q);
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b) out.Kab[a][b] -= w * S[a][b];
            add_L(L, powi(t, 2 * k - 1));
            out.K += w * dot(L.eval<T>(q), bg.Vup, n);
          }
        }
        break;
      }
      case QfiFamily::integral2: {
        const auto bg = background<T>(sys, q);
        for (int k = 0; k <= ell; ++k) {
          const auto& L = Ls[static_cast<std::size_t>(k)];
          const T w = powi(t, 2 * k + 1) / (2.0 * k + 1.0);
          const auto S = sym_deriv(bg.md, L, q);
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) out.Kab[a][b] -= w * S[a][b];
          add_L(L, powi(t, 2 * k));
          out.K += w * dot(L.eval<T>(q), bg.Vup, n);
        }
        break;
      }
      case QfiFamily::integral3: {
        const auto bg = background<T>(sys, q);
        const auto& L = Ls.front();
        const T e = exp(lambda * t);
        const auto S = sym_deriv(bg.md, L, q);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) out.Kab[a][b] = -e * S[a][b];
        add_L(L, e * lambda);
        out.K = e * dot(L.eval<T>(q), bg.Vup, n);
        break;
      }
      default:
        break;
    }
    return out;
  }

  int input_order() const {
    int o = std::min(sys.metric.g().order(), sys.V.order());
    if (C0) o = std::min(o, C0->order());
    if (G) o = std::min(o, G->order());
    for (const auto& L : Ls) o = std::min(o, L.order());
    return o;
  }

  Domain domain() const {
    Domain d = sys.domain();
    if (C0) d = d.merged(C0->domain());
    if (G) d = d.merged(G->domain());
    for (const auto& L : Ls) d = d.merged(L.domain());
    return d;
  }
};

namespace {

QfiCoefficients make_coefficients(const std::shared_ptr<const QfiSpec::Data>& d) {
  const int n = d->sys.dim();
  const int order = d->input_order() - 1;
  const Domain dom = d->domain();
  auto Kab = Sym2Field::generate(n, [&](int a, int b) {
    return make_derived(n + 1, order, [d, a, b](auto x) { return d->at(x).Kab[a][b]; }, dom);
  });
  std::vector<ScalarField> ka;
  for (int a = 0; a < n; ++a)
    ka.push_back(make_derived(n + 1, order, [d, a](auto x) { return d->at(x).Ka[a]; }, dom));
  auto K = make_derived(n + 1, order, [d](auto x) { return d->at(x).K; }, dom);
  return {std::move(Kab), CovectorField(std::move(ka)), std::move(K)};
}

std::vector<double> join(std::span<const double> q, double t) {
  std::vector<double> x(q.begin(), q.end());
  x.push_back(t);
  return x;
}

// psi, X and the pieces they come from, generic in T.
template <class T>
struct MultiplierParts {
  kernel::MetricData<T> md;
  kernel::Sym2Jet<T> KJ;
  kernel::CovectorJet<T> LJ;
  Rank3<T> D{};
  Mat<T> S{};
  Vec<T> X{};
  T psi{};
};

template <class T>
MultiplierParts<T> multiplier_parts(const ConstrainedSystem& sys, const QfiCoefficients& k, std::span<const T> x) {
  const int n = sys.dim();
  MultiplierParts<T> m;
  m.md = kernel::metric_data<T>(sys.metric, x.first(static_cast<std::size_t>(n)));
  m.KJ = kernel::sym2_jet<T>(k.Kab, x);
  m.LJ = kernel::covector_jet<T>(k.Ka, x);
  m.D = kernel::cov_deriv(m.md, m.KJ);
  m.S = kernel::symmetrize(kernel::cov_deriv(m.md, m.LJ), n);
  Mat<T> Kt{};
  for (int a = 0; a < n; ++a) {
    T s(0.0);
    for (int b = 0; b < n; ++b) {
      Kt[a][b] = m.KJ.d[a][b][n];
      for (int c = 0; c < n; ++c) s += m.md.ginv[b][c] * (m.D[b][c][a] + 2.0 * m.D[c][a][b]);
    }
    m.X[a] = s / static_cast<double>(n + 2);
  }
  m.psi = (kernel::contract(m.md.ginv, m.S, n) + kernel::contract(m.md.ginv, Kt, n)) / static_cast<double>(n);
  return m;
}

void check_coefficients(const ConstrainedSystem& sys, const QfiCoefficients& k) {
  const int n = sys.dim();
  if (k.Kab.dim() != n || k.Ka.dim() != n || k.Kab.arg_dim() != n + 1 || k.Ka.arg_dim() != n + 1 ||
      k.K.dim() != n + 1)
    throw Error(ErrorCode::DimensionMismatch, "coefficients must be fields of (q, t) matching the metric");
}

}  // namespace

Multiplier multiplier(const ConstrainedSystem& sys, const QfiCoefficients& k, double t, std::span<const double> q) {
  check_coefficients(sys, k);
  const auto x = join(q, t);
  const auto m = multiplier_parts<double>(sys, k, x);
  return {m.psi, m.X};
}

PdeResiduals pde_residuals(const ConstrainedSystem& sys, const QfiCoefficients& k, double t,
                           std::span<const double> q) {
  check_coefficients(sys, k);
  const int n = sys.dim();
  const auto x = join(q, t);
  const auto m = multiplier_parts<double>(sys, k, x);
  const auto bg = background<double>(sys, q);
  const auto KJ = kernel::scalar_jet<double>(k.K, std::span<const double>(x));
  PdeResiduals r;

  const auto lhs = kernel::cyclic_symmetrize(m.D, n);
  const auto rhs = kernel::symmetrized_product(m.X, m.md.g, n);
  Rank3<double> r1{};
  Mat<double> r2{};
  Vec<double> r3{};
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) r1[a][b][c] = lhs[a][b][c] - rhs[a][b][c];
      r2[a][b] = m.S[a][b] - m.psi * m.md.g[a][b] + m.KJ.d[a][b][n];
    }
    double s = KJ.d[a] - 2.0 * (bg.V - sys.E0) * m.X[a] + m.LJ.d[a][n];
    for (int b = 0; b < n; ++b) s -= 2.0 * m.KJ.v[a][b] * bg.Vup[b];
    r3[a] = s;
  }
  r.killing_tensor = frobenius(r1, n);
  r.vector = frobenius(r2, n);
  r.scalar = norm(r3, n);
  r.time = std::abs(KJ.d[n] - dot(m.LJ.v, bg.Vup, n) - 2.0 * (bg.V - sys.E0) * m.psi);
  return r;
}

IntegrabilityResiduals fi_integrability_residuals(const ConstrainedSystem& sys, const QfiCoefficients& k, double t,
                                                  std::span<const double> q) {
  check_coefficients(sys, k);
  const int n = sys.dim();
  const auto xd = join(q, t);
  auto x = seed(xd);
  const std::span<const Dual1> xs(x.data(), xd.size());
  const auto m = multiplier_parts<Dual1>(sys, k, xs);
  const auto bg = background<Dual1>(sys, xs.first(static_cast<std::size_t>(n)));
  const Dual1 KV = dot(m.LJ.v, bg.Vup, n);

  Vec<double> r1{};
  Vec<Dual1> W{};
  for (int a = 0; a < n; ++a) {
    double s = m.LJ.d[a][n].d[n] + KV.d[a] + 2.0 * bg.dV[a].v * m.psi.v +
               2.0 * (bg.V.v - sys.E0) * (m.psi.d[a] - m.X[a].d[n]);
    Dual1 w = 2.0 * (bg.V - sys.E0) * m.X[a] - m.LJ.d[a][n];
    for (int b = 0; b < n; ++b) {
      s -= 2.0 * m.KJ.d[a][b][n].v * bg.Vup[b].v;
      w += 2.0 * m.KJ.v[a][b] * bg.Vup[b];
    }
    r1[a] = s;
    W[a] = w;
  }
  IntegrabilityResiduals out;
  out.mixed_time = norm(r1, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      out.mixed_space = std::max(out.mixed_space, 0.5 * std::abs(W[a].d[b] - W[b].d[a]));
  return out;
}

QfiSpec::QfiSpec(std::shared_ptr<const Data> data) : data_(std::move(data)), coeffs_(make_coefficients(data_)) {}

QfiFamily QfiSpec::family() const { return data_->family; }
int QfiSpec::ell() const { return data_->ell; }
double QfiSpec::lambda() const { return data_->lambda; }
double QfiSpec::c() const { return data_->c; }
const ConstrainedSystem& QfiSpec::system() const { return data_->sys; }
const std::vector<ConditionResidual>& QfiSpec::condition_residuals() const { return data_->residuals; }
const std::optional<CovectorField>& QfiSpec::X0() const { return data_->X0; }
const std::vector<CovectorField>& QfiSpec::Ys() const { return data_->Ys; }

double QfiSpec::max_condition_residual() const {
  double m = 0.0;
  for (const auto& r : data_->residuals) m = std::max(m, r.max_residual);
  return m;
}

double QfiSpec::evaluate(double t, std::span<const double> q, std::span<const double> qd) const {
  const int n = data_->sys.dim();
  if (static_cast<int>(q.size()) != n || static_cast<int>(qd.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "state dimension differs from the system");
  if (data_->domain().margin(q) <= 0.0) throw Error(ErrorCode::OutOfDomain, "state lies on an excluded locus");
  const auto x = join(q, t);
  const auto c = data_->at<double>(x);
  double I = c.K;
  for (int a = 0; a < n; ++a) {
    I += c.Ka[a] * qd[a];
    for (int b = 0; b < n; ++b) I += c.Kab[a][b] * qd[a] * qd[b];
  }
  return I;
}

double QfiSpec::time_derivative(double t, std::span<const double> q, std::span<const double> qd) const {
  const int n = data_->sys.dim();
  const auto xd = join(q, t);
  auto x = seed(xd);
  std::array<Dual1, kMaxDim> v{};
  for (int a = 0; a < n; ++a) {
    v[a].v = qd[a];
    v[a].d[n + 1 + a] = 1.0;
  }
  const auto c = data_->at<Dual1>(std::span<const Dual1>(x.data(), xd.size()));
  Dual1 I = c.K;
  for (int a = 0; a < n; ++a) {
    I += c.Ka[a] * v[a];
    for (int b = 0; b < n; ++b) I += c.Kab[a][b] * v[a] * v[b];
  }
  const auto bg = background<double>(data_->sys, q);
  double dI = I.d[n];
  for (int a = 0; a < n; ++a) {
    double acc = -bg.Vup[a];
    for (int b = 0; b < n; ++b)
      for (int e = 0; e < n; ++e) acc -= bg.md.gamma[a][b][e] * qd[b] * qd[e];
    dI += I.d[a] * qd[a] + I.d[n + 1 + a] * acc;
  }
  return dI;
}

// ---------------------------------------------------------------------------
// Builders

namespace {

using DataPtr = std::shared_ptr<QfiSpec::Data>;

std::vector<Point> condition_points(const QfiSpec::Data& d, const BuildOptions& opts) {
  return sample_points(d.domain(), d.sys.sample_box(), opts.samples, opts.seed);
}

// Relative size of a residual vector against its largest contributing term.
struct Accumulator {
  Vec<double> sum{};
  double scale = 1.0;
  int n;
  explicit Accumulator(int dim) : n(dim) {}
  void add(const Vec<double>& v, double w = 1.0) {
    for (int a = 0; a < n; ++a) sum[a] += w * v[a];
    scale = std::max(scale, std::abs(w) * norm(v, n));
  }
  double relative() const { return norm(sum, n) / scale; }
};

Vec<double> to_vec(const std::vector<double>& v) {
  Vec<double> out{};
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

// (L_b V^,b)_,a at a double point.
Vec<double> grad_LV(const ConstrainedSystem& sys, const CovectorField& L, std::span<const double> q) {
  const int n = sys.dim();
  auto x = seed(q);
  const std::span<const Dual1> xs(x.data(), q.size());
  const auto bg = background<Dual1>(sys, xs);
  const Dual1 s = dot(L.eval<Dual1>(xs), bg.Vup, n);
  Vec<double> out{};
  for (int a = 0; a < n; ++a) out[a] = s.d[a];
  return out;
}

Vec<double> mat_vec(const Mat<double>& m, const Vec<double>& v, int n) {
  Vec<double> out{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) out[a] += m[a][b] * v[b];
  return out;
}

void record(QfiSpec::Data& d, std::string name, double value, int points) {
  for (auto& r : d.residuals)
    if (r.name == name) {
      r.max_residual = std::max(r.max_residual, value);
      r.points = std::max(r.points, points);
      return;
    }
  d.residuals.push_back({std::move(name), value, points});
}

void check_system(const ConstrainedSystem& sys) {
  if (sys.V.dim() != sys.dim()) throw Error(ErrorCode::DimensionMismatch, "potential does not match metric");
}

void check_covector(const ConstrainedSystem& sys, const CovectorField& L) {
  if (L.dim() != sys.dim() || L.arg_dim() != sys.dim())
    throw Error(ErrorCode::DimensionMismatch, "vector does not match metric dimension");
}

// Certifies that each L_(k)(a;b) is a CKT and stores Y_(k)a.
void prepare_Ls(QfiSpec::Data& d, const std::vector<Point>& pts, const BuildOptions& opts) {
  for (std::size_t k = 0; k < d.Ls.size(); ++k) {
    check_covector(d.sys, d.Ls[k]);
    const auto S = sym_cov_derivative_field(d.sys.metric, d.Ls[k]);
    d.Ys.push_back(associated_vector_field(d.sys.metric, S));
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, ckt_residual(d.sys.metric, S, p));
    record(d, "CKT L" + std::to_string(k), worst, static_cast<int>(pts.size()));
    if (opts.enforce && worst > opts.symmetry_tol)
      throw Error(ErrorCode::UncertifiedSymmetry,
                  "L_(a;b) #" + std::to_string(k) + " is not a CKT (residual " + std::to_string(worst) + ")");
  }
}

void prepare_C0(QfiSpec::Data& d, const std::vector<Point>& pts, const BuildOptions& opts) {
  if (d.C0->dim() != d.sys.dim() || d.C0->arg_dim() != d.sys.dim())
    throw Error(ErrorCode::DimensionMismatch, "C0 does not match metric dimension");
  d.X0 = associated_vector_field(d.sys.metric, *d.C0);
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, ckt_residual(d.sys.metric, *d.C0, p));
  record(d, "CKT C0", worst, static_cast<int>(pts.size()));
  if (opts.enforce && worst > opts.symmetry_tol)
    throw Error(ErrorCode::UncertifiedSymmetry, "C0 is not a CKT (residual " + std::to_string(worst) + ")");
}

// (L_(k) V^,b)_,a + 2 L_(k)(a;b) V^,b + coupling * L_(k+1)a + 2 (V - E0) Y_(k)a
double chain_condition(const QfiSpec::Data& d, std::size_t k, double coupling, std::span<const double> p) {
  const int n = d.sys.dim();
  const auto bg = background<double>(d.sys, p);
  const auto& L = d.Ls[k];
  Accumulator acc(n);
  acc.add(grad_LV(d.sys, L, p));
  acc.add(mat_vec(sym_deriv(bg.md, L, std::span<const double>(p)), bg.Vup, n), 2.0);
  if (coupling != 0.0) acc.add(to_vec(d.Ls[k + 1].value(p)), coupling);
  acc.add(to_vec(d.Ys[k].value(p)), 2.0 * (bg.V - d.sys.E0));
  return acc.relative();
}

// G_,a - 2 C0_ab V^,b - 2 (V - E0) X0_a + L_(1)a
double G_condition(const QfiSpec::Data& d, std::span<const double> p) {
  const int n = d.sys.dim();
  const auto bg = background<double>(d.sys, p);
  Accumulator acc(n);
  Vec<double> dG{};
  for (int a = 0; a < n; ++a) dG[a] = d.G->partial(p, a);
  acc.add(dG);
  const auto C = d.C0->value(p);
  Mat<double> Cm{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) Cm[a][b] = C[a][b];
  acc.add(mat_vec(Cm, bg.Vup, n), -2.0);
  acc.add(to_vec(d.X0->value(p)), -2.0 * (bg.V - d.sys.E0));
  if (d.ell > 0) acc.add(to_vec(d.Ls.front().value(p)));
  return acc.relative();
}

DataPtr finish(DataPtr d, const BuildOptions& opts) {
  if (opts.enforce) {
    for (const auto& r : d->residuals)
      if (r.max_residual > opts.tol && r.name.rfind("CKT", 0) != 0)
        throw Error(ErrorCode::ConditionViolated,
                    "condition " + r.name + " residual " + std::to_string(r.max_residual) + " exceeds tolerance");
  }
  return d;
}

void check_ell(int ell) {
  if (ell < 0 || ell > 8) throw Error(ErrorCode::BadConfig, "ell must lie in 0..8");
}

}  // namespace

namespace {

DataPtr integral1_data(const ConstrainedSystem& sys, const Sym2Field& C0, const std::vector<CovectorField>& Ls,
                       const ScalarField& G, const BuildOptions& opts) {
  check_system(sys);
  check_ell(static_cast<int>(Ls.size()));
  auto d = std::make_shared<QfiSpec::Data>(sys);
  d->family = QfiFamily::integral1;
  d->formula = QfiFamily::integral1;
  d->ell = static_cast<int>(Ls.size());
  d->C0 = C0;
  d->Ls = Ls;
  d->G = G;
  const auto pts = condition_points(*d, opts);
  prepare_C0(*d, pts, opts);
  prepare_Ls(*d, pts, opts);
  const int np = static_cast<int>(pts.size());
  for (const auto& p : pts) {
    const std::size_t ell = Ls.size();
    if (ell > 0) {
      record(*d, "L chain top", chain_condition(*d, ell - 1, 0.0, p), np);
      for (std::size_t k = 1; k < ell; ++k) {
        const double kk = static_cast<double>(k);
        record(*d, "L chain k=" + std::to_string(k), chain_condition(*d, k - 1, 2.0 * kk * (2.0 * kk + 1.0), p), np);
      }
    }
    record(*d, "G gradient", G_condition(*d, p), np);
  }
  return finish(std::move(d), opts);
}

DataPtr integral2_data(const ConstrainedSystem& sys, const std::vector<CovectorField>& Ls, const BuildOptions& opts) {
  check_system(sys);
  if (Ls.empty()) throw Error(ErrorCode::BadConfig, "Integral 2 needs at least L_(0)");
  check_ell(static_cast<int>(Ls.size()) - 1);
  auto d = std::make_shared<QfiSpec::Data>(sys);
  d->family = QfiFamily::integral2;
  d->formula = QfiFamily::integral2;
  d->ell = static_cast<int>(Ls.size()) - 1;
  d->Ls = Ls;
  const auto pts = condition_points(*d, opts);
  prepare_Ls(*d, pts, opts);
  const int np = static_cast<int>(pts.size());
  const std::size_t ell = static_cast<std::size_t>(d->ell);
  for (const auto& p : pts) {
    record(*d, "L chain top", chain_condition(*d, ell, 0.0, p), np);
    for (std::size_t k = 0; k < ell; ++k) {
      const double kk = static_cast<double>(k);
      record(*d, "L chain k=" + std::to_string(k), chain_condition(*d, k, 2.0 * (kk + 1.0) * (2.0 * kk + 1.0), p), np);
    }
  }
  return finish(std::move(d), opts);
}

DataPtr integral3_data(const ConstrainedSystem& sys, double lambda, const CovectorField& L, const BuildOptions& opts) {
  check_system(sys);
  if (lambda == 0.0) throw Error(ErrorCode::ZeroLambda, "Integral 3 needs lambda != 0");
  auto d = std::make_shared<QfiSpec::Data>(sys);
  d->family = QfiFamily::integral3;
  d->formula = QfiFamily::integral3;
  d->lambda = lambda;
  d->Ls = {L};
  const auto pts = condition_points(*d, opts);
  prepare_Ls(*d, pts, opts);
  const int np = static_cast<int>(pts.size());
  for (const auto& p : pts) {
    const int n = sys.dim();
    const auto bg = background<double>(sys, p);
    Accumulator acc(n);
    acc.add(grad_LV(sys, L, p));
    acc.add(mat_vec(sym_deriv(bg.md, L, std::span<const double>(p)), bg.Vup, n), 2.0);
    acc.add(to_vec(L.value(p)), lambda * lambda);
    acc.add(to_vec(d->Ys[0].value(p)), 2.0 * (bg.V - sys.E0));
    record(*d, "exponential L condition", acc.relative(), np);
  }
  return finish(std::move(d), opts);
}

}  // namespace

QfiSpec build_integral1(const ConstrainedSystem& sys, const Sym2Field& C0, const std::vector<CovectorField>& Ls,
                        const ScalarField& G, const BuildOptions& opts) {
  return QfiSpec(integral1_data(sys, C0, Ls, G, opts));
}

QfiSpec build_integral2(const ConstrainedSystem& sys, const std::vector<CovectorField>& Ls, const BuildOptions& opts) {
  return QfiSpec(integral2_data(sys, Ls, opts));
}

QfiSpec build_integral3(const ConstrainedSystem& sys, double lambda, const CovectorField& L,
                        const BuildOptions& opts) {
  return QfiSpec(integral3_data(sys, lambda, L, opts));
}

QfiSpec build_J1(const ConstrainedSystem& sys, const Sym2Field& C, const ScalarField& G, const BuildOptions& opts) {
  check_system(sys);
  auto d = std::make_shared<QfiSpec::Data>(sys);
  d->family = QfiFamily::J1;
  d->formula = QfiFamily::J1;
  d->C0 = C;
  d->G = G;
  const auto pts = condition_points(*d, opts);
  prepare_C0(*d, pts, opts);
  for (const auto& p : pts) record(*d, "G gradient", G_condition(*d, p), static_cast<int>(pts.size()));
  return QfiSpec(finish(std::move(d), opts));
}

QfiSpec build_J2(const ConstrainedSystem& sys, const CovectorField& L, const BuildOptions& opts) {
  check_system(sys);
  check_covector(sys, L);
  auto d = std::make_shared<QfiSpec::Data>(sys);
  d->family = QfiFamily::J2;
  d->formula = QfiFamily::J2;
  d->Ls = {L};
  const auto pts = condition_points(*d, opts);
  std::vector<double> cs;
  double ckv = 0.0, scale = 1.0;
  for (const auto& p : pts) {
    const auto r = ckv_residual(sys.metric, L, p);
    ckv = std::max(ckv, r.norm);
    const auto bg = background<double>(sys, p);
    const double lv = dot(to_vec(L.value(p)), bg.Vup, sys.dim());
    const double pv = 2.0 * (bg.V - sys.E0) * r.psi;
    scale = std::max({scale, std::abs(lv), std::abs(pv)});
    cs.push_back(lv + pv);
  }
  const int np = static_cast<int>(pts.size());
  record(*d, "CKV L", ckv, np);
  if (opts.enforce && ckv > opts.symmetry_tol)
    throw Error(ErrorCode::UncertifiedSymmetry, "L is not a CKV (residual " + std::to_string(ckv) + ")");
  const double mean = std::accumulate(cs.begin(), cs.end(), 0.0) / static_cast<double>(cs.size());
  double var = 0.0;
  for (double v : cs) var += (v - mean) * (v - mean);
  d->c = mean;
  record(*d, "c constancy", std::sqrt(var / static_cast<double>(cs.size())) / scale, np);
  return QfiSpec(finish(std::move(d), opts));
}

QfiSpec hamiltonian(const ConstrainedSystem& sys) {
  const int n = sys.dim();
  auto C = Sym2Field::generate(n, [&](int a, int b) {
    return make_composite(n, sys.metric.g().order(), [g = sys.metric.g()(a, b)](auto q) { return 0.5 * g(q); },
                          sys.metric.domain());
  });
  BuildOptions opts;
  opts.samples = 1;
  opts.enforce = false;
  auto d = std::make_shared<QfiSpec::Data>(sys);
  d->family = QfiFamily::J1;
  d->formula = QfiFamily::J1;
  d->C0 = C;
  d->G = sys.V;
  d->X0 = CovectorField::zero(n, n);
  return QfiSpec(std::move(d));
}

QfiSpec geodesic_specialize(const ConstrainedSystem& sys, const GeodesicInput& in, const BuildOptions& opts) {
  for (const auto& p : sample_points(sys.domain(), sys.sample_box(), std::min(opts.samples, 50), opts.seed)) {
    double dv = std::abs(sys.V.value(p));
    for (int a = 0; a < sys.dim(); ++a) dv = std::max(dv, std::abs(sys.V.partial(p, a)));
    if (dv > 0.0) throw Error(ErrorCode::NonzeroPotential, "geodesic forms need V = 0");
  }
  const bool null = sys.E0 == 0.0;
  const int n = sys.dim();
  using Form = GeodesicInput::Form;
  auto need = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::BadConfig, what);
  };
  DataPtr spec;
  switch (in.form) {
    case Form::tensor:
      need(in.C0.has_value(), "tensor form needs C0");
      spec = integral1_data(sys, *in.C0, {}, in.G ? *in.G : ScalarField::zero(n), opts);
      break;
    case Form::gradient: {
      need(in.G.has_value(), "gradient form needs G");
      const auto G = *in.G;
      std::vector<ScalarField> comps;
      for (int a = 0; a < n; ++a)
        comps.push_back(make_derived(
            n, G.order() - 1,
            [G, a](auto q) {
              using T = scalar_of<decltype(q)>;
              auto x = lift<T>(q);
              return -G(std::span<const Dual<T>>(x.data(), q.size())).d[a];
            },
            G.domain()));
      spec = integral1_data(sys, Sym2Field::zero(n, n), {CovectorField(std::move(comps))}, G, opts);
      break;
    }
    case Form::vector:
      need(in.Ls.size() == 1, "vector form needs one L");
      spec = integral2_data(sys, in.Ls, opts);
      break;
    case Form::integral1:
      need(in.C0.has_value() && in.G.has_value(), "integral1 form needs C0 and G");
      spec = integral1_data(sys, *in.C0, in.Ls, *in.G, opts);
      break;
    case Form::integral2:
      spec = integral2_data(sys, in.Ls, opts);
      break;
    case Form::exponential:
      need(in.Ls.size() == 1, "exponential form needs one L");
      spec = integral3_data(sys, in.lambda, in.Ls.front(), opts);
      break;
  }
  spec->family = null ? QfiFamily::geodesic_P1 : QfiFamily::geodesic_P2;
  return QfiSpec(std::move(spec));
}

GradientFn G_gradient(const ConstrainedSystem& sys, const Sym2Field& C0, const std::optional<CovectorField>& L1) {
  const auto X0 = associated_vector_field(sys.metric, C0);
  return [sys, C0, X0, L1](std::span<const double> p) {
    const int n = sys.dim();
    const auto bg = background<double>(sys, p);
    const auto C = C0.value(p);
    const auto X = X0.value(p);
    Vec<double> W{};
    for (int a = 0; a < n; ++a) {
      double s = 2.0 * (bg.V - sys.E0) * X[a];
      for (int b = 0; b < n; ++b) s += 2.0 * C[a][b] * bg.Vup[b];
      if (L1) s -= (*L1)[a].value(p);
      W[a] = s;
    }
    return W;
  };
}

double check_G_integrability(const ConstrainedSystem& sys, const Sym2Field& C0, const std::optional<CovectorField>& L1,
                             std::span<const double> point) {
  const int n = sys.dim();
  const auto X0 = associated_vector_field(sys.metric, C0);
  auto x = seed(point);
  const std::span<const Dual1> q(x.data(), point.size());
  const auto bg = background<Dual1>(sys, q);
  const auto C = C0.eval<Dual1>(q);
  const auto X = X0.eval<Dual1>(q);
  Vec<Dual1> W{};
  for (int a = 0; a < n; ++a) {
    Dual1 s = 2.0 * (bg.V - sys.E0) * X[a];
    for (int b = 0; b < n; ++b) s += 2.0 * C[a][b] * bg.Vup[b];
    if (L1) s -= (*L1)[a](q);
    W[a] = s;
  }
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) worst = std::max(worst, std::abs(W[a].d[b] - W[b].d[a]));
  return worst;
}

double solve_G_by_quadrature(const GradientFn& grad, std::span<const double> base, std::span<const double> target,
                             double tol) {
  const std::size_t n = base.size();
  if (target.size() != n) throw Error(ErrorCode::DimensionMismatch, "base and target differ in dimension");
  auto path = [&](bool forward) {
    std::vector<double> p(base.begin(), base.end());
    double total = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t a = forward ? step : n - 1 - step;
      const double from = p[a], to = target[a];
      total += quadrature(
          [&, a](double s) {
            auto r = p;
            r[a] = s;
            return grad(r)[a];
          },
          from, to, tol);
      p[a] = to;
    }
    return total;
  };
  const double g1 = path(true);
  if (n == 1) return g1;
  const double g2 = path(false);
  if (std::abs(g1 - g2) > 1e3 * tol * std::max(1.0, std::abs(g1)))
    throw Error(ErrorCode::NonIntegrable, "line integrals along the two paths differ by " + std::to_string(g1 - g2));
  return g1;
}

}  // namespace qfi
