#pragma once
// Finite-difference oracles used only by tests.

#include <array>
#include <functional>
#include <vector>

#include "qfilab/geometry.hpp"

namespace qfi::oracle {

using Fn = std::function<double(const std::vector<double>&)>;

/// Fourth-order central difference of fn along coordinate i.
inline double d1(const Fn& fn, std::vector<double> p, int i, double h = 1e-3) {
  const double x = p[static_cast<std::size_t>(i)];
  auto at = [&](double s) {
    p[static_cast<std::size_t>(i)] = x + s * h;
    return fn(p);
  };
  return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
}

inline double d1_central(const Fn& fn, std::vector<double> p, int i, double h = 1e-5) {
  const double x = p[static_cast<std::size_t>(i)];
  p[static_cast<std::size_t>(i)] = x + h;
  const double fp = fn(p);
  p[static_cast<std::size_t>(i)] = x - h;
  return (fp - fn(p)) / (2 * h);
}

using MatFn = std::function<std::array<std::array<double, 3>, 3>(const std::vector<double>&)>;

inline Mat<double> inverse2(const Mat<double>& g, int n) {
  Mat<double> inv{};
  kernel::inverse(g, n, inv);
  return inv;
}

/// Christoffels from finite-differenced metric components.
inline Rank3<double> christoffel_fd(const MetricSpec& metric, const std::vector<double>& p, double h = 1e-5,
                                    bool fourth = false) {
  const int n = metric.dim();
  auto g = [&](int a, int b) -> Fn {
    return [&, a, b](const std::vector<double>& q) { return metric.g()(a, b).value(q); };
  };
  Mat<double> gm{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) gm[a][b] = metric.g()(a, b).value(p);
  const auto gi = inverse2(gm, n);
  Rank3<double> dg{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) dg[a][b][c] = fourth ? d1(g(a, b), p, c, h) : d1_central(g(a, b), p, c, h);
  Rank3<double> out{};
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double s = 0;
        for (int d = 0; d < n; ++d) s += gi[a][d] * (dg[d][b][c] + dg[d][c][b] - dg[b][c][d]);
        out[a][b][c] = 0.5 * s;
      }
  return out;
}

}  // namespace qfi::oracle
