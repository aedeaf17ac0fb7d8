#pragma once

#include <vector>

#include "featprobe/io/feature_map.hpp"

namespace featprobe::analysis {

struct BiasReport {
  // Mean over locations of |Wx| / (|Wx| + |b|).
  double input_dominance_ratio = 0.0;
  // Median cosine between Wx and Wx + b over locations with Wx != 0.
  double directional_mdncs = 0.0;
  double bias_norm = 0.0;
  std::size_t locations = 0;
  // Locations with Wx == 0, left out of the cosine median.
  std::size_t skipped_count = 0;
};

// W [C,C], b [C], features [C,H,W] each. Throws kEmptySplit for no samples
// and kShapeMismatch on dimension disagreements. When every location is
// skipped the cosine median is reported as 0.
BiasReport bias_analyze(const Tensor& w, const Tensor& b, const std::vector<FeatureMap>& samples);

}  // namespace featprobe::analysis
