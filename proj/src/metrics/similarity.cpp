#include "featprobe/metrics/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "featprobe/nn/loss.hpp"
#include "featprobe/stats.hpp"

namespace featprobe::metrics {

std::vector<double> location_cosines(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape() || a.rank() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "cosine needs equal [C,H,W] maps, got " +
                                               shape_to_string(a.shape()) + " and " +
                                               shape_to_string(b.shape()));
  }
  const std::size_t C = a.dim(0), P = a.dim(1) * a.dim(2);
  std::vector<double> cos(P);
  for (std::size_t p = 0; p < P; ++p) {
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double x = a[c * P + p], y = b[c * P + p];
      dot += x * y;
      aa += x * x;
      bb += y * y;
    }
    cos[p] = std::clamp(dot / std::max(std::sqrt(aa * bb), nn::kCosineEps), -1.0, 1.0);
  }
  return cos;
}

double mdn_cs(const Tensor& a, const Tensor& b, const ChangeMask* mask) {
  std::vector<double> cos = location_cosines(a, b);
  if (!mask) return median(cos);
  if (mask->grid.rows != a.dim(1) || mask->grid.cols != a.dim(2)) {
    throw Error(ErrorCode::kShapeMismatch, "mask grid " + std::to_string(mask->grid.rows) + "x" +
                                               std::to_string(mask->grid.cols) +
                                               " does not match the feature grid");
  }
  std::vector<double> kept;
  for (std::size_t p = 0; p < cos.size(); ++p) {
    if (mask->cells[p]) kept.push_back(cos[p]);
  }
  if (kept.empty()) throw Error(ErrorCode::kEmptyMask, "empty mask: no changed cells to score");
  return median(kept);
}

double mdn_cs(const FeatureMap& a, const FeatureMap& b, const ChangeMask* mask) {
  return mdn_cs(a.tensor, b.tensor, mask);
}

}  // namespace featprobe::metrics
