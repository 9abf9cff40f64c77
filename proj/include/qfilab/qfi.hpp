#pragma once
// Quadratic first integrals of a conservative system on a fixed energy level.
//
// A candidate integral is I = K_ab(t,q) qd^a qd^b + K_a(t,q) qd^a + K(t,q).
// Time-dependent coefficients are fields on (q, t) with t in the last slot.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qfilab/symmetry.hpp"

namespace qfi {

struct ConstrainedSystem {
  MetricSpec metric;
  ScalarField V;
  double E0 = 0.0;
  /// Region for certification sweeps; the metric's box when unset.
  std::optional<SampleBox> box;

  int dim() const { return metric.dim(); }
  const SampleBox& sample_box() const { return box ? *box : metric.box(); }
  Domain domain() const { return metric.domain().merged(V.domain()); }
  double hamiltonian(std::span<const double> q, std::span<const double> qd) const;
  bool on_shell(std::span<const double> q, std::span<const double> qd, double tol) const {
    return std::abs(hamiltonian(q, qd) - E0) <= tol;
  }
};

/// Field triple (K_ab, K_a, K) on (q, t).
struct QfiCoefficients {
  Sym2Field Kab;
  CovectorField Ka;
  ScalarField K;
};

/// Norms of the four coefficient equations of dI/dt = (psi + X qd)(g qd qd + 2(V - E0)).
struct PdeResiduals {
  double killing_tensor = 0.0;  // K_(ab;c) - X_(a g_bc)
  double vector = 0.0;          // K_(a;b) - psi g_ab + K_ab,t
  double scalar = 0.0;          // K_,a - 2 K_ab V^,b - 2 (V - E0) X_a + K_a,t
  double time = 0.0;            // K_,t - K_a V^,a - 2 (V - E0) psi
  double max() const { return std::max({killing_tensor, vector, scalar, time}); }
};

PdeResiduals pde_residuals(const ConstrainedSystem& sys, const QfiCoefficients& k, double t,
                           std::span<const double> q);

struct IntegrabilityResiduals {
  double mixed_time = 0.0;   // K_,[at] = 0
  double mixed_space = 0.0;  // K_;[ab] = 0
};

IntegrabilityResiduals fi_integrability_residuals(const ConstrainedSystem& sys, const QfiCoefficients& k, double t,
                                                  std::span<const double> q);

/// psi and X_a of the multiplier, from the coefficients.
struct Multiplier {
  double psi = 0.0;
  Vec<double> X{};
};
Multiplier multiplier(const ConstrainedSystem& sys, const QfiCoefficients& k, double t, std::span<const double> q);

enum class QfiFamily { integral1, integral2, integral3, J1, J2, geodesic_P1, geodesic_P2 };
std::string_view to_string(QfiFamily f);

struct ConditionResidual {
  std::string name;
  double max_residual = 0.0;
  int points = 0;
};

struct BuildOptions {
  int samples = 200;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  /// Throw ConditionViolated / UncertifiedSymmetry instead of returning an uncertified spec.
  bool enforce = true;
  double symmetry_tol = 1e-9;
};

class QfiSpec {
 public:
  struct Data;

  explicit QfiSpec(std::shared_ptr<const Data> data);

  QfiFamily family() const;
  int ell() const;
  double lambda() const;
  /// The constant c of an autonomous linear integral L_a qd^a + c t.
  double c() const;
  const ConstrainedSystem& system() const;
  const QfiCoefficients& coefficients() const { return coeffs_; }
  const std::vector<ConditionResidual>& condition_residuals() const;
  double max_condition_residual() const;
  bool certified(double tol) const { return max_condition_residual() <= tol; }

  /// Associated vector of C_(0)ab and of each L_(k)(a;b), when present.
  const std::optional<CovectorField>& X0() const;
  const std::vector<CovectorField>& Ys() const;

  double evaluate(double t, std::span<const double> q, std::span<const double> qd) const;

  /// dI/dt along q'' = -Gamma qd qd - V^,a, by forward differentiation of I.
  double time_derivative(double t, std::span<const double> q, std::span<const double> qd) const;

 private:
  std::shared_ptr<const Data> data_;
  QfiCoefficients coeffs_;
};

/// Integral 1: C_(0)ab and L_(2k-1)a for k = 1..ell (Ls.size() == ell).
QfiSpec build_integral1(const ConstrainedSystem& sys, const Sym2Field& C0, const std::vector<CovectorField>& Ls,
                        const ScalarField& G, const BuildOptions& opts = {});
/// Integral 2: L_(2k)a for k = 0..ell (Ls.size() == ell + 1).
QfiSpec build_integral2(const ConstrainedSystem& sys, const std::vector<CovectorField>& Ls,
                        const BuildOptions& opts = {});
/// Integral 3 with lambda != 0.
QfiSpec build_integral3(const ConstrainedSystem& sys, double lambda, const CovectorField& L,
                        const BuildOptions& opts = {});
/// J1 = C_ab qd qd + G.
QfiSpec build_J1(const ConstrainedSystem& sys, const Sym2Field& C, const ScalarField& G,
                 const BuildOptions& opts = {});
/// L_a qd^a + c t for a CKV L, with c estimated over the samples.
QfiSpec build_J2(const ConstrainedSystem& sys, const CovectorField& L, const BuildOptions& opts = {});
/// H = g/2 qd qd + V.
QfiSpec hamiltonian(const ConstrainedSystem& sys);

struct GeodesicInput {
  enum class Form {
    tensor,       // C_ab qd qd
    gradient,     // t^2/2 G_;ab qd qd - t G_,a qd + G
    vector,       // -t L_(a;b) qd qd + L_a qd
    integral1,
    integral2,
    exponential,
  };
  Form form = Form::tensor;
  std::optional<Sym2Field> C0;
  std::optional<ScalarField> G;
  std::vector<CovectorField> Ls;
  double lambda = 0.0;
};

QfiSpec geodesic_specialize(const ConstrainedSystem& sys, const GeodesicInput& in, const BuildOptions& opts = {});

/// Max over coordinate pairs of |d_b W_a - d_a W_b| for
/// W_a = 2 C0_ab V^,b + 2 (V - E0) X0_a - L_(1)a.
double check_G_integrability(const ConstrainedSystem& sys, const Sym2Field& C0, const std::optional<CovectorField>& L1,
                             std::span<const double> point);

using GradientFn = std::function<Vec<double>(std::span<const double>)>;

/// The right-hand side W_a above as a callable.
GradientFn G_gradient(const ConstrainedSystem& sys, const Sym2Field& C0, const std::optional<CovectorField>& L1);

/// G(target) - G(base) by line integrals of grad along axis-parallel paths.
/// Two coordinate orderings must agree, otherwise NonIntegrable.
double solve_G_by_quadrature(const GradientFn& grad, std::span<const double> base, std::span<const double> target,
                             double tol = 1e-10);

}  // namespace qfi
