#pragma once
// Pointwise Riemannian geometry of a kinetic metric.
//
// Everything here evaluates at a point; nothing is symbolic. Covariant
// components are stored and indices are raised with the inverse metric
// computed at the point. The kernel templates run at any scalar type T the
// fields support one order above, so a quantity computed at T = Dual1
// carries its own exact first partials.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>

#include "qfilab/field.hpp"
#include "qfilab/sampling.hpp"

namespace qfi {

template <class T>
using Vec = std::array<T, kMaxDim>;
template <class T>
using Mat = std::array<Vec<T>, kMaxDim>;
template <class T>
using Rank3 = std::array<Mat<T>, kMaxDim>;
template <class T>
using Rank4 = std::array<Rank3<T>, kMaxDim>;
/// Partials over coordinate slots plus one optional time slot.
template <class T>
using Grad = std::array<T, kMaxDim + 1>;

enum class Signature { riemannian, lorentzian, unknown };

class MetricSpec {
 public:
  MetricSpec(std::string name, Sym2Field g, Signature hint, SampleBox box, Domain extra = {});

  const std::string& name() const { return name_; }
  int dim() const { return g_.dim(); }
  const Sym2Field& g() const { return g_; }
  Signature signature() const { return hint_; }
  const SampleBox& box() const { return box_; }
  const Domain& domain() const { return domain_; }

 private:
  std::string name_;
  Sym2Field g_;
  Signature hint_;
  SampleBox box_;
  Domain domain_;
};

struct ConnectionEval {
  Point point;
  int n = 0;
  Rank3<double> gamma{};   // gamma[a][b][c] = Gamma^a_bc
  Rank4<double> dgamma{};  // dgamma[a][b][c][d] = d_d Gamma^a_bc
};

ConnectionEval christoffel(const MetricSpec& metric, std::span<const double> point);

/// L_(a;b) for a covector field.
Mat<double> sym_cov_derivative(const MetricSpec& metric, const CovectorField& L,
                               std::span<const double> point);

/// C_ab;c, stored as out[a][b][c].
Rank3<double> cov_derivative_tensor2(const MetricSpec& metric, const Sym2Field& C,
                                     std::span<const double> point);

/// Scalar curvature of a 2D metric from R = 2 R_1212 / det(g), with
/// R^a_bcd = d_c Gamma^a_db - d_d Gamma^a_cb + Gamma^a_ce Gamma^e_db - Gamma^a_de Gamma^e_cb.
double ricci_scalar_2d(const MetricSpec& metric, std::span<const double> point);

/// R_1212 in the same convention.
double riemann_1212(const MetricSpec& metric, std::span<const double> point);

namespace kernel {

template <class T>
struct MetricData {
  int n = 0;
  Mat<T> g{};
  Mat<T> ginv{};
  Rank3<T> dg{};     // dg[a][b][c] = d_c g_ab
  Rank3<T> gamma{};  // gamma[a][b][c] = Gamma^a_bc
  T det{};
};

template <class T>
struct CovectorJet {
  Vec<T> v{};
  std::array<Grad<T>, kMaxDim> d{};  // d[a][c] = d_c L_a
};

template <class T>
struct Sym2Jet {
  Mat<T> v{};
  std::array<std::array<Grad<T>, kMaxDim>, kMaxDim> d{};  // d[a][b][c] = d_c U_ab
};

template <class T>
struct ScalarJet {
  T v{};
  Grad<T> d{};
};

template <class T>
T inverse(const Mat<T>& m, int n, Mat<T>& inv) {
  T det;
  if (n == 1) {
    det = m[0][0];
    inv[0][0] = 1.0 / det;
  } else if (n == 2) {
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const T r = 1.0 / det;
    inv[0][0] = m[1][1] * r;
    inv[1][1] = m[0][0] * r;
    inv[0][1] = -m[0][1] * r;
    inv[1][0] = -m[1][0] * r;
  } else {
    const T c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    const T c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    const T c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    const T r = 1.0 / det;
    inv[0][0] = c00 * r;
    inv[1][0] = c01 * r;
    inv[2][0] = c02 * r;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * r;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * r;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * r;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * r;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * r;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * r;
  }
  return det;
}

void check_nonsingular(double det, double scale, int n);

/// Metric, inverse, first partials and Christoffel symbols at q (the first
/// n entries of q are used; extra entries such as t are ignored).
template <class T>
MetricData<T> metric_data(const MetricSpec& metric, std::span<const T> q) {
  MetricData<T> md;
  const int n = metric.dim();
  md.n = n;
  auto x = lift<T>(q.first(static_cast<std::size_t>(n)));
  auto gj = metric.g().template eval<Dual<T>>(std::span<const Dual<T>>(x.data(), static_cast<std::size_t>(n)));
  double scale = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      md.g[a][b] = gj[a][b].v;
      scale = std::max(scale, std::abs(value_of(md.g[a][b])));
      for (int c = 0; c < n; ++c) md.dg[a][b][c] = gj[a][b].d[c];
    }
  }
  md.det = inverse(md.g, n, md.ginv);
  check_nonsingular(value_of(md.det), scale, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = b; c < n; ++c) {
        T s(0.0);
        for (int d = 0; d < n; ++d) s += md.ginv[a][d] * (md.dg[d][b][c] + md.dg[d][c][b] - md.dg[b][c][d]);
        md.gamma[a][b][c] = 0.5 * s;
        md.gamma[a][c][b] = md.gamma[a][b][c];
      }
    }
  }
  return md;
}

/// Value and partials (over all argument slots) of a scalar field.
template <class T>
ScalarJet<T> scalar_jet(const ScalarField& f, std::span<const T> q) {
  const auto m = static_cast<std::size_t>(f.dim());
  auto x = lift<T>(q.first(m));
  const Dual<T> r = f(std::span<const Dual<T>>(x.data(), m));
  ScalarJet<T> out;
  out.v = r.v;
  for (std::size_t c = 0; c < m; ++c) out.d[c] = r.d[c];
  return out;
}

template <class T>
CovectorJet<T> covector_jet(const CovectorField& L, std::span<const T> q) {
  const auto m = static_cast<std::size_t>(L.arg_dim());
  auto x = lift<T>(q.first(m));
  auto r = L.template eval<Dual<T>>(std::span<const Dual<T>>(x.data(), m));
  CovectorJet<T> out;
  for (int a = 0; a < L.dim(); ++a) {
    out.v[a] = r[a].v;
    for (std::size_t c = 0; c < m; ++c) out.d[a][c] = r[a].d[c];
  }
  return out;
}

template <class T>
Sym2Jet<T> sym2_jet(const Sym2Field& U, std::span<const T> q) {
  const auto m = static_cast<std::size_t>(U.arg_dim());
  auto x = lift<T>(q.first(m));
  auto r = U.template eval<Dual<T>>(std::span<const Dual<T>>(x.data(), m));
  Sym2Jet<T> out;
  const int n = U.dim();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      out.v[a][b] = r[a][b].v;
      for (std::size_t c = 0; c < m; ++c) out.d[a][b][c] = r[a][b].d[c];
    }
  }
  return out;
}

/// L_a;b = d_b L_a - Gamma^c_ab L_c.
template <class T>
Mat<T> cov_deriv(const MetricData<T>& md, const CovectorJet<T>& L) {
  Mat<T> out{};
  for (int a = 0; a < md.n; ++a) {
    for (int b = 0; b < md.n; ++b) {
      T s = L.d[a][b];
      for (int c = 0; c < md.n; ++c) s -= md.gamma[c][a][b] * L.v[c];
      out[a][b] = s;
    }
  }
  return out;
}

/// U_ab;c = d_c U_ab - Gamma^d_ac U_db - Gamma^d_bc U_ad.
template <class T>
Rank3<T> cov_deriv(const MetricData<T>& md, const Sym2Jet<T>& U) {
  Rank3<T> out{};
  const int n = md.n;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        T s = U.d[a][b][c];
        for (int d = 0; d < n; ++d) s -= md.gamma[d][a][c] * U.v[d][b] + md.gamma[d][b][c] * U.v[a][d];
        out[a][b][c] = s;
        out[b][a][c] = s;
      }
    }
  }
  return out;
}

template <class T>
Mat<T> symmetrize(const Mat<T>& m, int n) {
  Mat<T> out{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) out[a][b] = 0.5 * (m[a][b] + m[b][a]);
  return out;
}

template <class T>
Vec<T> raise(const MetricData<T>& md, const Vec<T>& w) {
  Vec<T> out{};
  for (int a = 0; a < md.n; ++a) {
    T s(0.0);
    for (int b = 0; b < md.n; ++b) s += md.ginv[a][b] * w[b];
    out[a] = s;
  }
  return out;
}

template <class T>
T contract(const Mat<T>& ginv, const Mat<T>& m, int n) {
  T s(0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) s += ginv[a][b] * m[a][b];
  return s;
}

/// Fully symmetrized rank-3 tensor whose first two slots are already symmetric:
/// S_(abc) = (S_abc + S_bca + S_cab) / 3.
template <class T>
Rank3<T> cyclic_symmetrize(const Rank3<T>& s, int n) {
  Rank3<T> out{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) out[a][b][c] = (s[a][b][c] + s[b][c][a] + s[c][a][b]) * (1.0 / 3.0);
  return out;
}

/// u_(a g_bc) = (u_a g_bc + u_b g_ca + u_c g_ab) / 3.
template <class T>
Rank3<T> symmetrized_product(const Vec<T>& u, const Mat<T>& g, int n) {
  Rank3<T> out{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        out[a][b][c] = (u[a] * g[b][c] + u[b] * g[c][a] + u[c] * g[a][b]) * (1.0 / 3.0);
  return out;
}

template <class T>
T riemann_1212(const MetricSpec& metric, std::span<const T> q) {
  // Gamma at one order up carries its own partials.
  const auto x = lift<T>(q.first(2));
  const auto md = metric_data<Dual<T>>(metric, std::span<const Dual<T>>(x.data(), 2));
  auto gamma = [&](int a, int b, int c) -> const T& { return md.gamma[a][b][c].v; };
  auto dgamma = [&](int a, int b, int c, int d) -> const T& { return md.gamma[a][b][c].d[d]; };
  // R^e_212 with indices (b, c, d) = (1, 0, 1) in zero-based form.
  T r1212(0.0);
  for (int e = 0; e < 2; ++e) {
    T re = dgamma(e, 1, 1, 0) - dgamma(e, 0, 1, 1);
    for (int f = 0; f < 2; ++f) re += gamma(e, 0, f) * gamma(f, 1, 1) - gamma(e, 1, f) * gamma(f, 0, 1);
    r1212 += md.g[0][e].v * re;
  }
  return r1212;
}

}  // namespace kernel

/// Frobenius norms used for residual certificates.
double frobenius(const Mat<double>& m, int n);
double frobenius(const Rank3<double>& m, int n);
double norm(const Vec<double>& v, int n);

}  // namespace qfi
