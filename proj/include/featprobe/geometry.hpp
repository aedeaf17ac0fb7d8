#pragma once

#include <cstddef>
#include <string_view>
#include <utility>

namespace featprobe {

// Spatial rearrangements shared by image manipulations and feature
// reordering. Rotations are clockwise; mirror_h flips left-right and
// mirror_v flips top-bottom.
enum class SpatialOp { kRot90, kRot180, kRot270, kMirrorH, kMirrorV };

std::string_view spatial_op_name(SpatialOp op) noexcept;
SpatialOp parse_spatial_op(std::string_view name);

struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const Grid&, const Grid&) = default;
};

inline Grid transformed_grid(SpatialOp op, Grid in) {
  if (op == SpatialOp::kRot90 || op == SpatialOp::kRot270) return {in.cols, in.rows};
  return in;
}

// Input cell that lands at (row, col) of the transformed grid.
inline std::pair<std::size_t, std::size_t> source_cell(SpatialOp op, Grid in, std::size_t row,
                                                       std::size_t col) {
  switch (op) {
    case SpatialOp::kRot90: return {in.rows - 1 - col, row};
    case SpatialOp::kRot180: return {in.rows - 1 - row, in.cols - 1 - col};
    case SpatialOp::kRot270: return {col, in.cols - 1 - row};
    case SpatialOp::kMirrorH: return {row, in.cols - 1 - col};
    case SpatialOp::kMirrorV: return {in.rows - 1 - row, col};
  }
  return {row, col};
}

}  // namespace featprobe
