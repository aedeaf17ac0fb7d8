#pragma once

#include <vector>

#include "featprobe/io/feature_map.hpp"
#include "featprobe/metrics/change_mask.hpp"

namespace featprobe::metrics {

// Per-location cosine between the channel vectors of two [C,H,W] tensors,
// dot / max(|a||b|, 1e-8), row-major over (h,w).
std::vector<double> location_cosines(const Tensor& a, const Tensor& b);

// Median of the per-location cosines, optionally restricted to the cells set
// in `mask`. Throws kEmptyMask when the mask selects nothing.
double mdn_cs(const Tensor& a, const Tensor& b, const ChangeMask* mask = nullptr);
double mdn_cs(const FeatureMap& a, const FeatureMap& b, const ChangeMask* mask = nullptr);

}  // namespace featprobe::metrics
