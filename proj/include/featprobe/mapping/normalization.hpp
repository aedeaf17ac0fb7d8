#pragma once

#include "featprobe/io/feature_map.hpp"

namespace featprobe::mapping {

inline constexpr double kNormEps = 1e-8;

struct NormalizedMap {
  FeatureMap map;
  // Locations whose norm was below kNormEps; they are divided by kNormEps.
  std::size_t zero_norm_locations = 0;
};

// Scales each (h,w) channel vector to unit length. The divisor
// max(|v|, kNormEps) is stored in `norms`, so denormalize inverts it exactly
// up to rounding.
NormalizedMap normalize_locations(const FeatureMap& f);

// Requires stored norms; throws kInvalidParameter otherwise.
FeatureMap denormalize_locations(const FeatureMap& f);

// Tensor-level helpers on [C,H,W]; `norms` is [H,W].
Tensor location_norms(const Tensor& t);
Tensor scale_locations(const Tensor& t, const Tensor& factors, bool divide);

}  // namespace featprobe::mapping
