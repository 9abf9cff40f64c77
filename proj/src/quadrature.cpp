#include "qfilab/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "qfilab/error.hpp"

namespace qfi {

double quadrature(const std::function<double(double)>& fn, double a, double b, double tol) {
  if (a == b) return 0.0;
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 15>::integrate(fn, a, b, 20, tol, &error);
  if (!std::isfinite(value) || error > tol * std::max(1.0, std::abs(value)))
    throw Error(ErrorCode::NonConvergent, "quadrature error estimate " + std::to_string(error) + " above tolerance");
  return value;
}

}  // namespace qfi
