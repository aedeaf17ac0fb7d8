#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace featprobe::image {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit RGB, row-major, pixel (x, y) at index y * width + x.
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, Rgb fill = {0, 0, 0});
  Image(std::size_t width, std::size_t height, std::vector<Rgb> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  Rgb& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
  const Rgb& at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }

  const std::vector<Rgb>& pixels() const noexcept { return pixels_; }
  std::vector<Rgb>& pixels() noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<Rgb> pixels_;
};

struct PngReadResult {
  Image image;
  bool dropped_alpha = false;
};

// Any PNG color type is expanded to 8-bit RGB; alpha is discarded and reported.
PngReadResult read_png(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);

}  // namespace featprobe::image
