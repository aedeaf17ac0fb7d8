#include "featprobe/metrics/change_mask.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace featprobe::metrics {

std::size_t ChangeMask::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

nlohmann::json to_json(const ChangeMask& mask) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < mask.grid.rows; ++r) {
    std::string row;
    for (std::size_t c = 0; c < mask.grid.cols; ++c) row += mask.at(r, c) ? '1' : '0';
    rows.push_back(row);
  }
  return {{"grid", {mask.grid.rows, mask.grid.cols}}, {"changed_cells", mask.count()}, {"cells", rows}};
}

FloatImage to_float(const image::Image& img) {
  FloatImage out{img.width(), img.height(), {}};
  out.pixels.reserve(img.pixels().size());
  for (const auto& p : img.pixels()) out.pixels.push_back({double(p[0]), double(p[1]), double(p[2])});
  return out;
}

FloatImage resize_bilinear(const FloatImage& img, std::size_t width, std::size_t height) {
  if (img.width == width && img.height == height) return img;
  FloatImage out{width, height, std::vector<std::array<double, 3>>(width * height)};
  auto coord = [](std::size_t dst, std::size_t in, std::size_t outn) {
    double src = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) / static_cast<double>(outn) - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    return std::tuple{i0, i1, src - static_cast<double>(i0)};
  };
  for (std::size_t y = 0; y < height; ++y) {
    auto [y0, y1, fy] = coord(y, img.height, height);
    for (std::size_t x = 0; x < width; ++x) {
      auto [x0, x1, fx] = coord(x, img.width, width);
      const auto& a = img.pixels[y0 * img.width + x0];
      const auto& b = img.pixels[y0 * img.width + x1];
      const auto& c = img.pixels[y1 * img.width + x0];
      const auto& d = img.pixels[y1 * img.width + x1];
      for (int k = 0; k < 3; ++k) {
        const double top = a[k] + (b[k] - a[k]) * fx;
        const double bottom = c[k] + (d[k] - c[k]) * fx;
        out.pixels[y * width + x][k] = top + (bottom - top) * fy;
      }
    }
  }
  return out;
}

namespace {

std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto m = static_cast<std::ptrdiff_t>(n);
  while (i < 0 || i >= m) i = i < 0 ? -i : 2 * (m - 1) - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

FloatImage gaussian_blur(const FloatImage& img, std::size_t kernel, double sigma) {
  const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
  std::vector<double> w(kernel);
  double total = 0.0;
  for (std::ptrdiff_t k = -half; k <= half; ++k) {
    w[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * double(k * k) / (sigma * sigma));
    total += w[static_cast<std::size_t>(k + half)];
  }
  for (auto& v : w) v /= total;

  FloatImage tmp = img, out = img;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      std::array<double, 3> acc{};
      for (std::ptrdiff_t k = -half; k <= half; ++k) {
        const auto& p = img.pixels[y * img.width + reflect(std::ptrdiff_t(x) + k, img.width)];
        for (int ch = 0; ch < 3; ++ch) acc[ch] += w[static_cast<std::size_t>(k + half)] * p[ch];
      }
      tmp.pixels[y * img.width + x] = acc;
    }
  }
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      std::array<double, 3> acc{};
      for (std::ptrdiff_t k = -half; k <= half; ++k) {
        const auto& p = tmp.pixels[reflect(std::ptrdiff_t(y) + k, img.height) * img.width + x];
        for (int ch = 0; ch < 3; ++ch) acc[ch] += w[static_cast<std::size_t>(k + half)] * p[ch];
      }
      out.pixels[y * img.width + x] = acc;
    }
  }
  return out;
}

std::vector<double> change_distances(const image::Image& orig, const image::Image& manip,
                                     const MaskOptions& opts) {
  if (orig.width() != manip.width() || orig.height() != manip.height()) {
    throw Error(ErrorCode::kShapeMismatch, "change mask needs equally sized images");
  }
  if (opts.resolution == 0 || opts.kernel % 2 == 0 || opts.sigma <= 0.0) {
    throw Error(ErrorCode::kInvalidParameter, "mask resolution must be positive and the kernel odd");
  }
  auto prep = [&](const image::Image& img) {
    return gaussian_blur(resize_bilinear(to_float(img), opts.resolution, opts.resolution),
                         opts.kernel, opts.sigma);
  };
  const FloatImage a = prep(orig), b = prep(manip);
  std::vector<double> dist(a.pixels.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    double sq = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = a.pixels[i][ch] - b.pixels[i][ch];
      sq += d * d;
    }
    dist[i] = std::sqrt(sq);
  }
  return dist;
}

std::pair<std::size_t, std::size_t> cell_footprint(std::size_t index, std::size_t cells,
                                                   std::size_t pixels) {
  return {index * pixels / cells, (index + 1) * pixels / cells};
}

ChangeMask any_pool(const std::vector<std::uint8_t>& changed, std::size_t width, std::size_t height,
                    Grid grid) {
  if (grid.rows == 0 || grid.cols == 0 || grid.rows > height || grid.cols > width) {
    throw Error(ErrorCode::kInvalidParameter, "mask grid must be non-empty and no finer than the image");
  }
  ChangeMask mask(grid);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    auto [y0, y1] = cell_footprint(r, grid.rows, height);
    for (std::size_t c = 0; c < grid.cols; ++c) {
      auto [x0, x1] = cell_footprint(c, grid.cols, width);
      bool any = false;
      for (std::size_t y = y0; y < y1 && !any; ++y) {
        for (std::size_t x = x0; x < x1 && !any; ++x) any = changed[y * width + x] != 0;
      }
      mask.set(r, c, any);
    }
  }
  return mask;
}

ChangeMask build_change_mask(const image::Image& orig, const image::Image& manip, Grid grid,
                             const MaskOptions& opts) {
  const std::vector<double> dist = change_distances(orig, manip, opts);
  std::vector<std::uint8_t> changed(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) changed[i] = dist[i] > opts.threshold;
  return any_pool(changed, opts.resolution, opts.resolution, grid);
}

}  // namespace featprobe::metrics
