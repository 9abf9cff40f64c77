#include "qfilab/sampling.hpp"

#include <cmath>
#include <random>

namespace qfi {
namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13};

}  // namespace

std::vector<Point> sample_points(const Domain& domain, const SampleBox& box, int count,
                                 std::uint64_t seed, double min_distance) {
  const int n = box.dim();
  if (n < 1 || n > 6 || static_cast<int>(box.hi.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "sample box must have 1..6 matching bounds");

  std::vector<double> shift(static_cast<std::size_t>(n), 0.0);
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& s : shift) s = u(rng);
  }

  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::uint64_t max_index = static_cast<std::uint64_t>(count) * 1000 + 1000;
  for (std::uint64_t i = 1; static_cast<int>(out.size()) < count; ++i) {
    if (i > max_index)
      throw Error(ErrorCode::OutOfDomain, "sample box is almost entirely excluded by the domain");
    Point p(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      double u = radical_inverse(i, kPrimes[a]) + shift[a];
      u -= std::floor(u);
      p[a] = box.lo[a] + u * (box.hi[a] - box.lo[a]);
    }
    if (domain.admits(p, min_distance)) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace qfi
