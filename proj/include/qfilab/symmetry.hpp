#pragma once
// Conformal Killing vectors and second-order conformal Killing tensors:
// pointwise residuals, sampled certificates, constructions and catalogs.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qfilab/geometry.hpp"

namespace qfi {

struct Certificate {
  double max_residual = 0.0;
  int points_sampled = 0;
};

struct CertifyOptions {
  int samples = 200;
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

enum class SymmetryKind { ckv, ckt2 };

struct SymmetryObject {
  SymmetryKind kind = SymmetryKind::ckt2;
  std::string metric_name;
  std::optional<CovectorField> vector;  // CKV components L_a
  std::optional<Sym2Field> tensor;      // CKT components U_ab
  std::optional<ScalarField> conformal_factor;
  std::optional<CovectorField> associated_vector;
  Certificate certificate;

  bool certified(double tol) const { return certificate.max_residual <= tol; }
};

struct CkvCatalogEntry {
  std::string name;
  std::string metric_family;
  CovectorField vector;
  ScalarField conformal_factor;
};

struct CkvEval {
  double psi = 0.0;
  Mat<double> residual{};  // L_(a;b) - psi g_ab
  double norm = 0.0;
};

CkvEval ckv_residual(const MetricSpec& metric, const CovectorField& L, std::span<const double> point);

/// u_a = (U_;a + 2 U^b_a;b) / (n + 2).
Vec<double> ckt_associated_vector(const MetricSpec& metric, const Sym2Field& U, std::span<const double> point);

/// || U_(ab;c) - u_(a g_bc) ||_F.
double ckt_residual(const MetricSpec& metric, const Sym2Field& U, std::span<const double> point);

// The same quantities as fields, one derivative order below their inputs.
ScalarField conformal_factor_field(const MetricSpec& metric, const CovectorField& L);
CovectorField associated_vector_field(const MetricSpec& metric, const Sym2Field& U);
Sym2Field sym_cov_derivative_field(const MetricSpec& metric, const CovectorField& L);

std::vector<Point> certification_points(const MetricSpec& metric, const CertifyOptions& opts);

Certificate certify_ckv_residual(const MetricSpec& metric, const CovectorField& L, const CertifyOptions& opts = {});
Certificate certify_ckt_residual(const MetricSpec& metric, const Sym2Field& U, const CertifyOptions& opts = {});

SymmetryObject certify_ckv(const MetricSpec& metric, const CovectorField& L, const CertifyOptions& opts = {});
SymmetryObject certify_ckt(const MetricSpec& metric, const Sym2Field& U, const CertifyOptions& opts = {});

/// U_ab = f g_ab + sum_{K<=L} c[K][L] X_K(a X_L b), certified on return.
SymmetryObject ckt_from_ckvs(const MetricSpec& metric, const ScalarField& f,
                             const std::vector<CkvCatalogEntry>& ckvs,
                             const std::vector<std::vector<double>>& c, const CertifyOptions& opts = {});

enum class CkvClass { kv, hv, sckv, proper };
std::string_view to_string(CkvClass c);

/// Conformal factor tests over the sample set: psi = 0, psi constant,
/// psi_;ab = 0, otherwise proper.
CkvClass classify_ckv(const MetricSpec& metric, const CovectorField& L, const std::vector<Point>& samples,
                      double tol = 1e-9);

struct CktClass {
  bool is_KT = false;
  bool is_proper = false;
  bool is_HKT = false;
  bool is_tracefree = false;
  bool is_gradient_type = false;
};

CktClass classify_ckt(const MetricSpec& metric, const SymmetryObject& obj, const std::vector<Point>& samples,
                      double tol = 1e-9);

struct CkvFamilyParams {
  double k = 1.0;
  std::optional<ScalarField> f;   // off-diagonal family
  std::optional<ScalarField> F1;  // one-variable, argument y
  std::optional<ScalarField> F2;  // one-variable, argument x
  std::string metric_name = "offdiag";
};

/// Families: "E2", "offdiag", "constant-curvature".
std::vector<CkvCatalogEntry> ckv_catalog(std::string_view family, const CkvFamilyParams& params = {});

/// F2 f_x + F1 f_y + f (F1' + F2').
double kv_condition_residual(const ScalarField& f, const ScalarField& F1, const ScalarField& F2,
                             std::span<const double> point);

/// f_yy A1 - f_xx A2 + 3/2 (f_y A1' - f_x A2') + f/2 (A1'' - A2'').
double bertrand_darboux_residual(const ScalarField& f, const ScalarField& A1, const ScalarField& A2,
                                 std::span<const double> point);

/// (A1 + 3/2 A1' + 1/2 A1'') x + e^y (4 A1 + 3 A1' + 1/2 A1'') for the no-KV metric.
double no_kv_bd_residual(const ScalarField& A1, std::span<const double> point);

}  // namespace qfi
