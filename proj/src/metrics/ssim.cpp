#include "featprobe/metrics/ssim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "featprobe/error.hpp"

namespace featprobe::metrics {

namespace {

std::vector<double> luma(const image::Image& img) {
  std::vector<double> out;
  out.reserve(img.pixels().size());
  for (const auto& p : img.pixels()) out.push_back(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
  return out;
}

}  // namespace

SsimResult ssim_detailed(const image::Image& x, const image::Image& y, const SsimOptions& opts) {
  if (x.width() != y.width() || x.height() != y.height() || x.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "ssim needs two non-empty images of equal size");
  }
  const std::size_t W = x.width(), H = x.height();
  SsimResult result;
  std::size_t k = opts.window;
  if (k > std::min(W, H)) {
    k = std::min(W, H);
    if (k % 2 == 0) --k;
    result.window_shrunk = true;
  }
  result.window = k;

  std::vector<double> w(k * k);
  double total = 0.0;
  const double c = (static_cast<double>(k) - 1.0) / 2.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double di = double(i) - c, dj = double(j) - c;
      w[i * k + j] = std::exp(-(di * di + dj * dj) / (2.0 * opts.sigma * opts.sigma));
      total += w[i * k + j];
    }
  }
  for (auto& v : w) v /= total;

  const std::vector<double> lx = luma(x), ly = luma(y);
  const double c1 = std::pow(opts.k1 * opts.dynamic_range, 2);
  const double c2 = std::pow(opts.k2 * opts.dynamic_range, 2);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t top = 0; top + k <= H; ++top) {
    for (std::size_t left = 0; left + k <= W; ++left) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double wt = w[i * k + j];
          const double a = lx[(top + i) * W + left + j], b = ly[(top + i) * W + left + j];
          mx += wt * a;
          my += wt * b;
          sxx += wt * a * a;
          syy += wt * b * b;
          sxy += wt * a * b;
        }
      }
      const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
      sum += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  result.value = sum / static_cast<double>(count);
  return result;
}

double ssim(const image::Image& x, const image::Image& y, const SsimOptions& opts) {
  return ssim_detailed(x, y, opts).value;
}

}  // namespace featprobe::metrics
