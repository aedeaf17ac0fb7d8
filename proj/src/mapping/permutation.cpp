#include "featprobe/mapping/permutation.hpp"

namespace featprobe::mapping {

Tensor permute_tensor(const Tensor& t, const SpatialPermutation& p) {
  if (t.rank() != 3 || t.dim(1) != p.grid.rows || t.dim(2) != p.grid.cols) {
    throw Error(ErrorCode::kShapeMismatch, "permutation grid (" + std::to_string(p.grid.rows) + "," +
                                               std::to_string(p.grid.cols) +
                                               ") does not match feature map " +
                                               shape_to_string(t.shape()));
  }
  const std::size_t C = t.dim(0);
  const Grid out = p.output_grid();
  Tensor result(Shape{C, out.rows, out.cols});
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      auto [sr, sc] = source_cell(p.op, p.grid, r, c);
      for (std::size_t ch = 0; ch < C; ++ch) result.at(ch, r, c) = t.at(ch, sr, sc);
    }
  }
  return result;
}

FeatureMap permute_features(const FeatureMap& f, const SpatialPermutation& p) {
  FeatureMap out = f;
  out.tensor = permute_tensor(f.tensor, p);
  if (f.norms) {
    Tensor n3 = f.norms->reshaped({1, f.height(), f.width()});
    Tensor permuted = permute_tensor(n3, p);
    out.norms = permuted.reshaped({permuted.dim(1), permuted.dim(2)});
  }
  return out;
}

}  // namespace featprobe::mapping
