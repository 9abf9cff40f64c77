#pragma once

#include <functional>

namespace qfi {

/// Adaptive Gauss-Kronrod (7/15) integral of fn over [a, b]; throws
/// NonConvergent when the error estimate stays above tol * max(1, |value|).
double quadrature(const std::function<double(double)>& fn, double a, double b, double tol = 1e-10);

}  // namespace qfi
