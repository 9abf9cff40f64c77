#pragma once
// Built-in metrics, potentials and the coefficient functions of the worked
// examples. Every field here is written once as generic code and
// differentiated exactly by the dual backend.

#include <string>

#include "qfilab/geometry.hpp"

namespace qfi::catalog {

// Loci excluded from the built-in domains.
Locus origin_locus();              // r = 0
Locus axis_locus(int coordinate);  // q^coordinate = 0
Locus antidiagonal_locus();        // x + y = 0
Locus no_kv_locus();               // x + e^y = 0

MetricSpec euclidean(int n);

/// gamma = f(x, y) [[0, 1], [1, 0]].
MetricSpec offdiag(std::string name, ScalarField f, SampleBox box);

ScalarField constant_curvature_f(double k);  // k / (x + y)^2
ScalarField no_kv_f();                       // -x^3 e^y (x + e^y)
ScalarField toda_f(double k1, double k2, double b1, double b2, double b3);
ScalarField flat_f();  // x

MetricSpec constant_curvature(double k);
MetricSpec no_kv();
MetricSpec toda(double k1, double k2, double b1, double b2, double b3);
MetricSpec flat_lorentzian();

/// k / r^2 on E^2.
ScalarField newton_cotes(double k);
/// F(y/x) / r^2 + c/2 with F a one-variable field.
ScalarField ermakov_potential(ScalarField F, double c);
/// M(y/r^2) / r^4 with M a one-variable field.
ScalarField sckv_potential(ScalarField M);

/// One-variable field of y (A1, F1) or x (A2, F2) lifted to the plane.
ScalarField on_coordinate(const ScalarField& h, int coordinate);

/// f^2 diag(A1(y), A2(x)) on the off-diagonal family.
Sym2Field offdiag_ckt(const ScalarField& f, const ScalarField& A1, const ScalarField& A2);
/// Its associated vector (f_y A1 + f A1'/2, f_x A2 + f A2'/2).
CovectorField offdiag_ckt_vector(const ScalarField& f, const ScalarField& A1, const ScalarField& A2);

}  // namespace qfi::catalog
