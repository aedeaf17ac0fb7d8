#include "featprobe/mapping/normalization.hpp"

#include <algorithm>
#include <cmath>

namespace featprobe::mapping {

Tensor location_norms(const Tensor& t) {
  const std::size_t C = t.dim(0), H = t.dim(1), W = t.dim(2), P = H * W;
  Tensor norms(Shape{H, W});
  for (std::size_t p = 0; p < P; ++p) {
    double sq = 0.0;
    for (std::size_t c = 0; c < C; ++c) sq += static_cast<double>(t[c * P + p]) * t[c * P + p];
    norms[p] = static_cast<float>(std::sqrt(sq));
  }
  return norms;
}

Tensor scale_locations(const Tensor& t, const Tensor& factors, bool divide) {
  const std::size_t C = t.dim(0), P = t.dim(1) * t.dim(2);
  if (factors.size() != P) throw Error(ErrorCode::kShapeMismatch, "norm grid does not match map");
  Tensor out = t;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t p = 0; p < P; ++p) {
      out[c * P + p] = divide ? static_cast<float>(static_cast<double>(t[c * P + p]) / factors[p])
                              : static_cast<float>(static_cast<double>(t[c * P + p]) * factors[p]);
    }
  }
  return out;
}

NormalizedMap normalize_locations(const FeatureMap& f) {
  NormalizedMap result;
  Tensor norms = location_norms(f.tensor);
  for (auto& n : norms.data()) {
    if (n < kNormEps) {
      ++result.zero_norm_locations;
      n = static_cast<float>(kNormEps);
    }
  }
  result.map = f;
  result.map.tensor = scale_locations(f.tensor, norms, true);
  result.map.norms = std::move(norms);
  result.map.normalized = true;
  return result;
}

FeatureMap denormalize_locations(const FeatureMap& f) {
  if (!f.norms) {
    throw Error(ErrorCode::kInvalidParameter, "denormalize requires stored per-location norms");
  }
  FeatureMap out = f;
  out.tensor = scale_locations(f.tensor, *f.norms, false);
  out.norms.reset();
  out.normalized = false;
  return out;
}

}  // namespace featprobe::mapping
