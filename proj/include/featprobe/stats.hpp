#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "featprobe/error.hpp"

namespace featprobe {

// Positions of the middle element(s) of a sample: one index for odd counts,
// the two middle order statistics for even counts. The median is their mean.
struct MedianPick {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double value = 0.0;
};

template <typename T>
MedianPick median_pick(std::span<const T> values) {
  if (values.empty()) throw Error(ErrorCode::kInvalidParameter, "median of empty sample");
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Stable ordering keeps tie-breaking (and therefore subgradients) deterministic.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const std::size_t n = values.size();
  MedianPick pick;
  if (n % 2 == 1) {
    pick.lo = pick.hi = order[n / 2];
    pick.value = static_cast<double>(values[pick.lo]);
  } else {
    pick.lo = order[n / 2 - 1];
    pick.hi = order[n / 2];
    pick.value = 0.5 * (static_cast<double>(values[pick.lo]) + static_cast<double>(values[pick.hi]));
  }
  return pick;
}

template <typename T>
double median(std::span<const T> values) {
  return median_pick(values).value;
}

template <typename T>
double median(const std::vector<T>& values) {
  return median_pick(std::span<const T>(values)).value;
}

}  // namespace featprobe
