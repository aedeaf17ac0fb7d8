#include "featprobe/image/ops.hpp"

#include <algorithm>
#include <cmath>

#include "featprobe/error.hpp"
#include "featprobe/rng.hpp"

namespace featprobe::image {

std::string_view kind_name(ManipulationKind kind) noexcept {
  switch (kind) {
    case ManipulationKind::kRotate90: return "rotate90";
    case ManipulationKind::kRotate180: return "rotate180";
    case ManipulationKind::kRotate270: return "rotate270";
    case ManipulationKind::kMirrorH: return "mirror_h";
    case ManipulationKind::kMirrorV: return "mirror_v";
    case ManipulationKind::kGaussianNoise: return "gaussian_noise";
    case ManipulationKind::kHueShift: return "hue_shift";
    case ManipulationKind::kGrayscale: return "grayscale";
    case ManipulationKind::kMaskPolygon: return "mask_polygon";
    case ManipulationKind::kSemantic: return "semantic";
  }
  return "unknown";
}

std::optional<SpatialOp> spatial_op_of(ManipulationKind kind) noexcept {
  switch (kind) {
    case ManipulationKind::kRotate90: return SpatialOp::kRot90;
    case ManipulationKind::kRotate180: return SpatialOp::kRot180;
    case ManipulationKind::kRotate270: return SpatialOp::kRot270;
    case ManipulationKind::kMirrorH: return SpatialOp::kMirrorH;
    case ManipulationKind::kMirrorV: return SpatialOp::kMirrorV;
    default: return std::nullopt;
  }
}

std::string ManipulationSpec::manipulation_id() const {
  if (!id.empty()) return id;
  if (kind == ManipulationKind::kSemantic) return "semantic_" + semantic_id;
  return std::string(kind_name(kind));
}

namespace {

ManipulationKind parse_kind(std::string_view name) {
  for (auto k : {ManipulationKind::kRotate90, ManipulationKind::kRotate180,
                 ManipulationKind::kRotate270, ManipulationKind::kMirrorH,
                 ManipulationKind::kMirrorV, ManipulationKind::kGaussianNoise,
                 ManipulationKind::kHueShift, ManipulationKind::kGrayscale,
                 ManipulationKind::kMaskPolygon, ManipulationKind::kSemantic}) {
    if (kind_name(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidParameter, "unknown manipulation kind '" + std::string(name) + "'");
}

ManipulationSpec mask(std::string id, std::vector<Point> polygon, Rgb fill) {
  ManipulationSpec s;
  s.kind = ManipulationKind::kMaskPolygon;
  s.polygon = std::move(polygon);
  s.fill = fill;
  s.id = std::move(id);
  return s;
}

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

}  // namespace

ManipulationSpec preset(std::string_view name) {
  if (name == "mask_top_left") {
    return mask("mask_top_left", {{26, 26}, {103, 26}, {103, 103}, {26, 103}}, {255, 0, 0});
  }
  if (name == "mask_bottom_right") {
    return mask("mask_bottom_right", {{180, 180}, {270, 180}, {270, 270}, {180, 270}}, {0, 255, 0});
  }
  if (name == "mask_large_center") {
    return mask("mask_large_center", {{90, 90}, {193, 90}, {193, 193}, {90, 193}}, {0, 0, 255});
  }
  if (name == "mask_small_center") {
    return mask("mask_small_center", {{116, 116}, {154, 116}, {154, 154}, {116, 154}},
                {255, 255, 0});
  }
  ManipulationSpec s;
  s.kind = parse_kind(name);
  if (s.kind == ManipulationKind::kMaskPolygon || s.kind == ManipulationKind::kSemantic) {
    throw Error(ErrorCode::kInvalidParameter, "'" + std::string(name) + "' is not a preset");
  }
  return s;
}

ManipulationSpec spec_from_json(const nlohmann::json& j) {
  if (j.is_string()) return preset(j.get<std::string>());
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw Error(ErrorCode::kSchema, "manipulation spec needs a string 'kind'", "/kind");
  }
  ManipulationSpec s;
  std::string kind = j["kind"].get<std::string>();
  try {
    s = preset(kind);
  } catch (const Error&) {
    s.kind = parse_kind(kind);
  }
  try {
    if (j.contains("noise_std")) s.noise_std = j["noise_std"].get<double>();
    if (j.contains("hue_degrees")) s.hue_degrees = j["hue_degrees"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("id")) s.id = j["id"].get<std::string>();
    if (j.contains("semantic_id")) s.semantic_id = j["semantic_id"].get<std::string>();
    if (j.contains("fill")) {
      auto f = j["fill"].get<std::vector<int>>();
      if (f.size() != 3) throw Error(ErrorCode::kSchema, "fill must have 3 channels", "/fill");
      for (int c = 0; c < 3; ++c) s.fill[c] = static_cast<std::uint8_t>(std::clamp(f[c], 0, 255));
    }
    if (j.contains("polygon")) {
      s.polygon.clear();
      for (const auto& v : j["polygon"]) {
        auto xy = v.get<std::vector<long>>();
        if (xy.size() != 2) throw Error(ErrorCode::kSchema, "polygon vertex must be [x,y]", "/polygon");
        s.polygon.push_back({xy[0], xy[1]});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad manipulation spec: ") + e.what());
  }
  return s;
}

nlohmann::json spec_to_json(const ManipulationSpec& s) {
  nlohmann::json j = {{"kind", kind_name(s.kind)}, {"id", s.manipulation_id()}};
  switch (s.kind) {
    case ManipulationKind::kGaussianNoise:
      j["noise_std"] = s.noise_std;
      j["seed"] = s.seed;
      break;
    case ManipulationKind::kHueShift: j["hue_degrees"] = s.hue_degrees; break;
    case ManipulationKind::kMaskPolygon: {
      nlohmann::json poly = nlohmann::json::array();
      for (const auto& p : s.polygon) poly.push_back({p.x, p.y});
      j["polygon"] = poly;
      j["fill"] = {s.fill[0], s.fill[1], s.fill[2]};
      break;
    }
    case ManipulationKind::kSemantic: j["semantic_id"] = s.semantic_id; break;
    default: break;
  }
  return j;
}

Image apply_spatial(const Image& img, SpatialOp op) {
  Grid in{img.height(), img.width()};
  Grid out = transformed_grid(op, in);
  Image result(out.cols, out.rows);
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) {
      auto [sr, sc] = source_cell(op, in, r, c);
      result.at(c, r) = img.at(sc, sr);
    }
  }
  return result;
}

Image grayscale(const Image& img) {
  Image out = img;
  for (auto& p : out.pixels()) {
    std::uint8_t y = to_u8(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    p = {y, y, y};
  }
  return out;
}

Hsv rgb_to_hsv(Rgb rgb) {
  double r = rgb[0] / 255.0, g = rgb[1] / 255.0, b = rgb[2] / 255.0;
  double mx = std::max({r, g, b});
  double mn = std::min({r, g, b});
  double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = 60.0 * ((b - r) / delta + 2.0);
    } else {
      h = 60.0 * ((r - g) / delta + 4.0);
    }
  }
  if (h < 0.0) h += 360.0;
  double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

Rgb hsv_to_rgb(Hsv hsv) {
  double h = std::fmod(hsv.h, 360.0);
  if (h < 0.0) h += 360.0;
  double c = hsv.v * hsv.s;
  double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
  double m = hsv.v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h / 60.0)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {to_u8((r + m) * 255.0), to_u8((g + m) * 255.0), to_u8((b + m) * 255.0)};
}

Image hue_shift(const Image& img, double degrees) {
  Image out = img;
  if (degrees == 0.0) return out;
  for (auto& p : out.pixels()) {
    Hsv hsv = rgb_to_hsv(p);
    hsv.h = std::fmod(hsv.h + degrees, 360.0);
    if (hsv.h < 0.0) hsv.h += 360.0;
    p = hsv_to_rgb(hsv);
  }
  return out;
}

std::vector<double> noise_field(std::size_t width, std::size_t height, double std_dev,
                                std::uint64_t seed, std::uint64_t stream) {
  Pcg32 rng(seed, stream);
  std::vector<double> field(width * height * 3);
  for (double& v : field) v = std_dev * rng.normal();
  return field;
}

Image add_gaussian_noise(const Image& img, double std_dev, std::uint64_t seed, std::uint64_t stream) {
  if (!(std_dev >= 0.0) || !std::isfinite(std_dev)) {
    throw Error(ErrorCode::kInvalidParameter, "noise std must be finite and non-negative");
  }
  Image out = img;
  if (std_dev == 0.0) return out;
  auto field = noise_field(img.width(), img.height(), std_dev, seed, stream);
  auto& px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      double v = std::clamp(px[i][c] + field[3 * i + c], 0.0, 255.0);
      px[i][c] = static_cast<std::uint8_t>(std::nearbyint(v));
    }
  }
  return out;
}

bool point_in_polygon(const std::vector<Point>& poly, long x, long y) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > y) != (b.y > y)) {
      // x coordinate of the edge at height y, compared exactly in integers:
      // x < a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
      long dy = b.y - a.y;
      long lhs = (x - a.x) * dy;
      long rhs = (y - a.y) * (b.x - a.x);
      if (dy > 0 ? lhs < rhs : lhs > rhs) inside = !inside;
    }
  }
  return inside;
}

Image fill_polygon(const Image& img, const std::vector<Point>& polygon, Rgb fill) {
  if (polygon.size() < 3) {
    throw Error(ErrorCode::kInvalidParameter, "polygon needs at least 3 vertices");
  }
  for (const auto& p : polygon) {
    if (p.x < 0 || p.y < 0 || p.x > static_cast<long>(img.width()) ||
        p.y > static_cast<long>(img.height())) {
      throw Error(ErrorCode::kInvalidParameter, "polygon vertex (" + std::to_string(p.x) + "," +
                                                    std::to_string(p.y) + ") outside image bounds");
    }
  }
  long x0 = polygon[0].x, x1 = x0, y0 = polygon[0].y, y1 = y0;
  for (const auto& p : polygon) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }
  Image out = img;
  for (long y = y0; y <= y1 && y < static_cast<long>(img.height()); ++y) {
    for (long x = x0; x <= x1 && x < static_cast<long>(img.width()); ++x) {
      if (point_in_polygon(polygon, x, y)) out.at(x, y) = fill;
    }
  }
  return out;
}

Image apply_manipulation(const Image& img, const ManipulationSpec& spec) {
  if (img.empty()) throw Error(ErrorCode::kInvalidParameter, "empty image");
  if (auto op = spatial_op_of(spec.kind)) return apply_spatial(img, *op);
  switch (spec.kind) {
    case ManipulationKind::kGaussianNoise:
      return add_gaussian_noise(img, spec.noise_std, spec.seed, spec.stream);
    case ManipulationKind::kHueShift: return hue_shift(img, spec.hue_degrees);
    case ManipulationKind::kGrayscale: return grayscale(img);
    case ManipulationKind::kMaskPolygon: return fill_polygon(img, spec.polygon, spec.fill);
    case ManipulationKind::kSemantic:
      throw Error(ErrorCode::kNonExecutable,
                  "non-executable manipulation: semantic '" + spec.semantic_id +
                      "' pairs must be ingested through a manifest");
    default: break;
  }
  throw Error(ErrorCode::kInvalidParameter, "unhandled manipulation kind");
}

}  // namespace featprobe::image
