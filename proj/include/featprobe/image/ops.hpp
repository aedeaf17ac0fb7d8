#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featprobe/geometry.hpp"
#include "featprobe/image/image.hpp"

namespace featprobe::image {

enum class ManipulationKind {
  kRotate90,
  kRotate180,
  kRotate270,
  kMirrorH,
  kMirrorV,
  kGaussianNoise,
  kHueShift,
  kGrayscale,
  kMaskPolygon,
  kSemantic,
};

struct Point {
  long x = 0;
  long y = 0;
};

struct ManipulationSpec {
  ManipulationKind kind = ManipulationKind::kGrayscale;
  double noise_std = 40.0;
  double hue_degrees = 60.0;
  std::vector<Point> polygon;
  Rgb fill = {255, 0, 0};
  std::uint64_t seed = 0;
  // Noise stream; batch tools set this to the image's index.
  std::uint64_t stream = 0;
  // Only for kSemantic; such specs are never executed.
  std::string semantic_id;
  // Identifier written to manifests; defaults to the kind name.
  std::string id;

  std::string manipulation_id() const;
};

std::string_view kind_name(ManipulationKind kind) noexcept;
std::optional<SpatialOp> spatial_op_of(ManipulationKind kind) noexcept;

// Named presets covering the geometric, photometric and masking catalog:
// rotate90/180/270, mirror_h, mirror_v, gaussian_noise (std 40), hue_shift
// (+60), grayscale, mask_top_left, mask_bottom_right, mask_large_center,
// mask_small_center.
ManipulationSpec preset(std::string_view name);

// {"kind": ..., "noise_std", "hue_degrees", "polygon": [[x,y],...], "fill": [r,g,b],
//  "seed", "id"}; a string is treated as a preset name.
ManipulationSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ManipulationSpec& spec);

// Deterministic in (img, spec). Throws kNonExecutable for semantic specs and
// kInvalidParameter for polygons outside the image.
Image apply_manipulation(const Image& img, const ManipulationSpec& spec);

Image apply_spatial(const Image& img, SpatialOp op);
Image grayscale(const Image& img);
Image hue_shift(const Image& img, double degrees);
Image add_gaussian_noise(const Image& img, double std_dev, std::uint64_t seed, std::uint64_t stream);
Image fill_polygon(const Image& img, const std::vector<Point>& polygon, Rgb fill);

// The noise field added by add_gaussian_noise before clipping, channel-interleaved
// in pixel order.
std::vector<double> noise_field(std::size_t width, std::size_t height, double std_dev,
                                std::uint64_t seed, std::uint64_t stream);

// Even-odd test on integer pixel coordinates; edges through the point count
// only when they cross strictly to its right, which makes axis-aligned
// rectangles half-open: [x0, x1) x [y0, y1).
bool point_in_polygon(const std::vector<Point>& polygon, long x, long y);

struct Hsv {
  double h;  // degrees in [0, 360)
  double s;
  double v;
};
Hsv rgb_to_hsv(Rgb rgb);
Rgb hsv_to_rgb(Hsv hsv);

}  // namespace featprobe::image
