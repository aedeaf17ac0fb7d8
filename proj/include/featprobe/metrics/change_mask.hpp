#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "featprobe/error.hpp"
#include "featprobe/geometry.hpp"
#include "featprobe/image/image.hpp"

namespace featprobe::metrics {

// One flag per feature-grid cell, row-major.
struct ChangeMask {
  Grid grid;
  std::vector<std::uint8_t> cells;

  ChangeMask() = default;
  explicit ChangeMask(Grid g) : grid(g), cells(g.rows * g.cols, 0) {}

  bool at(std::size_t row, std::size_t col) const { return cells[row * grid.cols + col] != 0; }
  void set(std::size_t row, std::size_t col, bool v = true) { cells[row * grid.cols + col] = v; }
  std::size_t count() const;
  friend bool operator==(const ChangeMask&, const ChangeMask&) = default;
};

nlohmann::json to_json(const ChangeMask& mask);

struct MaskOptions {
  // Both images are resized to resolution x resolution (the backbone input).
  std::size_t resolution = 288;
  // A pixel is changed when its smoothed RGB distance is strictly above this.
  double threshold = 50.0;
  std::size_t kernel = 5;
  double sigma = 1.0;
};

// Float RGB planes, pixel (x, y) at y * width + x.
struct FloatImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::array<double, 3>> pixels;
};

FloatImage to_float(const image::Image& img);
// Bilinear with half-pixel centers and edge clamping; same-size resizes are
// exact copies.
FloatImage resize_bilinear(const FloatImage& img, std::size_t width, std::size_t height);
// Separable normalized Gaussian, reflect padding that does not repeat the edge
// sample (index -1 maps to 1).
FloatImage gaussian_blur(const FloatImage& img, std::size_t kernel, double sigma);

// Smoothed per-pixel Euclidean RGB distance at the mask resolution.
std::vector<double> change_distances(const image::Image& orig, const image::Image& manip,
                                     const MaskOptions& opts = {});

// Pixel range [first, last) covered by cell `index` when `pixels` are split
// into `cells` bands: [floor(i*R/n), floor((i+1)*R/n)).
std::pair<std::size_t, std::size_t> cell_footprint(std::size_t index, std::size_t cells,
                                                   std::size_t pixels);

// A cell is true iff any pixel in its footprint is set.
ChangeMask any_pool(const std::vector<std::uint8_t>& changed, std::size_t width, std::size_t height,
                    Grid grid);

// Throws kShapeMismatch when the images differ in size.
ChangeMask build_change_mask(const image::Image& orig, const image::Image& manip, Grid grid,
                             const MaskOptions& opts = {});

}  // namespace featprobe::metrics
