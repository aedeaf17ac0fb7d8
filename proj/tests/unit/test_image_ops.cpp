#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "featprobe/image/image.hpp"
#include "featprobe/image/ops.hpp"
#include "support.hpp"

using namespace featprobe;
using namespace featprobe::image;
using testing::TempDir;

namespace {

Image apply(const Image& img, std::string_view preset_name) {
  return apply_manipulation(img, preset(preset_name));
}

std::vector<Rgb> sorted_pixels(const Image& img) {
  auto p = img.pixels();
  std::sort(p.begin(), p.end());
  return p;
}

}  // namespace

TEST_CASE("rotate90 is clockwise on a 2x2 image") {
  const Rgb a{1, 1, 1}, b{2, 2, 2}, c{3, 3, 3}, d{4, 4, 4};
  const Image img(2, 2, std::vector<Rgb>{a, b, c, d});
  const Image r = apply(img, "rotate90");
  CHECK(r == Image(2, 2, std::vector<Rgb>{c, a, d, b}));
}

TEST_CASE("rotations swap dimensions and move pixels clockwise") {
  const Image img = testing::random_image(5, 3, 1);
  const Image r = apply(img, "rotate90");
  REQUIRE(r.width() == 3);
  REQUIRE(r.height() == 5);
  // Clockwise: the bottom-left corner moves to the top-left.
  for (std::size_t y = 0; y < 5; ++y) {
    for (std::size_t x = 0; x < 3; ++x) CHECK(r.at(x, y) == img.at(y, 2 - x));
  }
  CHECK(apply(img, "rotate180").width() == 5);
  CHECK(apply(img, "rotate270").width() == 3);
}

TEST_CASE("group laws hold bitwise") {
  const Image img = testing::random_image(7, 4, 2);
  CHECK(apply(apply(apply(apply(img, "rotate90"), "rotate90"), "rotate90"), "rotate90") == img);
  CHECK(apply(apply(img, "mirror_h"), "mirror_h") == img);
  CHECK(apply(apply(img, "mirror_v"), "mirror_v") == img);
  CHECK(apply(img, "rotate180") == apply(apply(img, "rotate90"), "rotate90"));
  CHECK(apply(img, "rotate270") == apply(apply(img, "rotate180"), "rotate90"));
  CHECK(apply(img, "rotate180") == apply(apply(img, "mirror_h"), "mirror_v"));
  CHECK(apply(img, "mirror_h").at(0, 0) == img.at(6, 0));
  CHECK(apply(img, "mirror_v").at(0, 0) == img.at(0, 3));
}

TEST_CASE("geometric ops preserve the pixel multiset") {
  const Image img = testing::random_image(6, 9, 3);
  for (auto name : {"rotate90", "rotate180", "rotate270", "mirror_h", "mirror_v"}) {
    CHECK(sorted_pixels(apply(img, name)) == sorted_pixels(img));
  }
}

TEST_CASE("grayscale uses BT.601 luma") {
  const Image red(1, 1, Rgb{255, 0, 0});
  CHECK(grayscale(red).at(0, 0) == Rgb{76, 76, 76});
  const Image img = testing::random_image(8, 8, 4);
  const Image g = grayscale(img);
  for (std::size_t i = 0; i < img.pixels().size(); ++i) {
    const auto [r, gg, b] = img.pixels()[i];
    const double luma = 0.299 * r + 0.587 * gg + 0.114 * b;
    const auto out = g.pixels()[i];
    CHECK(out[0] == out[1]);
    CHECK(out[1] == out[2]);
    CHECK(std::abs(out[0] - luma) <= 0.5 + 1e-9);
  }
}

TEST_CASE("hue shift") {
  const Image img = testing::random_image(16, 16, 5);
  CHECK(hue_shift(img, 0.0) == img);

  const Image yellow = hue_shift(Image(1, 1, Rgb{255, 0, 0}), 60.0);
  CHECK(std::abs(yellow.at(0, 0)[0] - 255) <= 1);
  CHECK(std::abs(yellow.at(0, 0)[1] - 255) <= 1);
  CHECK(std::abs(yellow.at(0, 0)[2] - 0) <= 1);

  const Image full = hue_shift(img, 360.0);
  for (std::size_t i = 0; i < img.pixels().size(); ++i) {
    for (int c = 0; c < 3; ++c) CHECK(std::abs(full.pixels()[i][c] - img.pixels()[i][c]) <= 1);
  }
}

TEST_CASE("hsv conversion round-trips primaries") {
  const Hsv h = rgb_to_hsv({0, 0, 255});
  CHECK(h.h == doctest::Approx(240.0));
  CHECK(h.s == doctest::Approx(1.0));
  CHECK(h.v == doctest::Approx(1.0));
  CHECK(hsv_to_rgb({120.0, 1.0, 1.0}) == Rgb{0, 255, 0});
}

TEST_CASE("the top-left mask fills exactly the half-open square") {
  const Image img = testing::random_image(288, 288, 6);
  const Image out = apply(img, "mask_top_left");
  std::size_t changed_or_red = 0;
  for (std::size_t y = 0; y < 288; ++y) {
    for (std::size_t x = 0; x < 288; ++x) {
      const bool inside = x >= 26 && x < 103 && y >= 26 && y < 103;
      if (inside) {
        CHECK(out.at(x, y) == Rgb{255, 0, 0});
        ++changed_or_red;
      } else {
        CHECK(out.at(x, y) == img.at(x, y));
      }
    }
  }
  CHECK(changed_or_red == 77u * 77u);
}

TEST_CASE("polygon rasterization follows the even-odd rule") {
  const std::vector<Point> tri = {{0, 0}, {10, 0}, {0, 10}};
  CHECK(point_in_polygon(tri, 1, 1));
  CHECK(point_in_polygon(tri, 0, 0));
  CHECK_FALSE(point_in_polygon(tri, 9, 9));
  CHECK_FALSE(point_in_polygon(tri, 10, 0));
  const Image img(12, 12);
  CHECK_THROWS_CODE(fill_polygon(img, {{0, 0}, {20, 0}, {0, 5}}, {1, 2, 3}), ErrorCode::kInvalidParameter);
  CHECK_THROWS_CODE(fill_polygon(img, {{0, 0}, {5, 0}}, {1, 2, 3}), ErrorCode::kInvalidParameter);
}

TEST_CASE("gaussian noise") {
  const Image img = testing::random_image(256, 256, 7);
  const Image a = add_gaussian_noise(img, 40.0, 11, 0);
  CHECK(a == add_gaussian_noise(img, 40.0, 11, 0));
  CHECK_FALSE(a == add_gaussian_noise(img, 40.0, 11, 1));
  CHECK(add_gaussian_noise(img, 0.0, 11, 0) == img);

  const auto field = noise_field(256, 256, 40.0, 11, 0);
  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= static_cast<double>(field.size());
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(field.size() - 1));
  CHECK(sd >= 38.5);
  CHECK(sd <= 41.5);

  for (std::size_t i = 0; i < img.pixels().size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double expected = std::nearbyint(std::clamp(img.pixels()[i][c] + field[i * 3 + c], 0.0, 255.0));
      REQUIRE(a.pixels()[i][c] == static_cast<int>(expected));
    }
  }
}

TEST_CASE("semantic specs are not executable") {
  ManipulationSpec spec;
  spec.kind = ManipulationKind::kSemantic;
  spec.semantic_id = "add_hat";
  CHECK_THROWS_CODE(apply_manipulation(Image(4, 4), spec), ErrorCode::kNonExecutable);
}

TEST_CASE("spec JSON round trip and presets") {
  const auto noise = preset("gaussian_noise");
  CHECK(noise.noise_std == 40.0);
  CHECK(preset("hue_shift").hue_degrees == 60.0);
  const auto mask = preset("mask_top_left");
  REQUIRE(mask.polygon.size() == 4);
  CHECK(mask.polygon[0].x == 26);
  CHECK(mask.polygon[2].y == 103);
  CHECK(mask.fill == Rgb{255, 0, 0});

  ManipulationSpec s = preset("mask_small_center");
  s.seed = 5;
  const ManipulationSpec back = spec_from_json(spec_to_json(s));
  CHECK(back.kind == s.kind);
  CHECK(back.polygon.size() == s.polygon.size());
  CHECK(back.manipulation_id() == s.manipulation_id());
  CHECK(spec_from_json("rotate90").kind == ManipulationKind::kRotate90);
  CHECK_THROWS_AS(preset("rotate45"), Error);
}

TEST_CASE("PNG round trip and alpha reporting") {
  TempDir dir;
  const Image img = testing::random_image(13, 7, 8);
  write_png(img, dir / "a.png");
  const auto back = read_png(dir / "a.png");
  CHECK(back.image == img);
  CHECK_FALSE(back.dropped_alpha);
  CHECK_THROWS_CODE(read_png(dir / "missing.png"), ErrorCode::kIo);
}
