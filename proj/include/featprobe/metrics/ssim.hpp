#pragma once

#include "featprobe/image/image.hpp"

namespace featprobe::metrics {

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

struct SsimResult {
  double value = 0.0;
  std::size_t window = 0;
  // Set when the image was smaller than the requested window and the window
  // was shrunk to the largest odd size that fits.
  bool window_shrunk = false;
};

// Mean local SSIM over every valid window position, computed on unrounded
// BT.601 luma with Gaussian-weighted statistics.
SsimResult ssim_detailed(const image::Image& x, const image::Image& y, const SsimOptions& opts = {});
double ssim(const image::Image& x, const image::Image& y, const SsimOptions& opts = {});

}  // namespace featprobe::metrics
