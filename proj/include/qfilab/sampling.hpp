#pragma once

#include <cstdint>
#include <vector>

#include "qfilab/field.hpp"

namespace qfi {

/// Axis-aligned region that certification sweeps draw points from.
struct SampleBox {
  Point lo;
  Point hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

/// Low-discrepancy (Halton) points inside the box, skipping points closer
/// than min_distance to any excluded locus. A nonzero seed applies a
/// deterministic Cranley-Patterson rotation.
std::vector<Point> sample_points(const Domain& domain, const SampleBox& box, int count,
                                 std::uint64_t seed = 0, double min_distance = 1e-2);

}  // namespace qfi
