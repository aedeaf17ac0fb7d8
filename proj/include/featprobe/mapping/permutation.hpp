#pragma once

#include "featprobe/geometry.hpp"
#include "featprobe/io/feature_map.hpp"

namespace featprobe::mapping {

// Reorders feature-vector positions to mirror a global geometric transform,
// leaving the vectors themselves untouched. `grid` is the (H, W) of the input.
struct SpatialPermutation {
  SpatialOp op = SpatialOp::kRot90;
  Grid grid;

  Grid output_grid() const { return transformed_grid(op, grid); }
};

// [C,H,W] -> [C,H',W'], with (H',W') = (W,H) for quarter turns.
Tensor permute_tensor(const Tensor& t, const SpatialPermutation& p);

// Also reorders stored norms. Throws kShapeMismatch when the grid differs.
FeatureMap permute_features(const FeatureMap& f, const SpatialPermutation& p);

}  // namespace featprobe::mapping
