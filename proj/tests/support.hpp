#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "featprobe/error.hpp"
#include "featprobe/image/image.hpp"
#include "featprobe/io/tensor.hpp"
#include "featprobe/rng.hpp"

namespace testing {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("featprobe_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline featprobe::Tensor random_tensor(featprobe::Shape shape, std::uint64_t seed, double scale = 1.0) {
  featprobe::Tensor t(std::move(shape));
  featprobe::Pcg32 rng(seed, 99);
  for (auto& v : t.data()) v = static_cast<float>(scale * rng.normal());
  return t;
}

inline featprobe::Tensor64 random_tensor64(featprobe::Shape shape, std::uint64_t seed, double scale = 1.0) {
  featprobe::Tensor64 t(std::move(shape));
  featprobe::Pcg32 rng(seed, 98);
  for (auto& v : t.data()) v = scale * rng.normal();
  return t;
}

inline featprobe::image::Image random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  featprobe::image::Image img(w, h);
  featprobe::Pcg32 rng(seed, 7);
  for (auto& p : img.pixels()) {
    for (auto& c : p) c = static_cast<std::uint8_t>(rng.below(256));
  }
  return img;
}

// Hand-assembled NPY v1.0 file, independent of the library writer.
inline void write_raw_npy(const fs::path& path, const std::string& dict, const void* payload,
                          std::size_t bytes) {
  std::string header = dict;
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header += '\n';
  std::ofstream out(path, std::ios::binary);
  out.write("\x93NUMPY\x01\x00", 8);
  const auto len = static_cast<std::uint16_t>(header.size());
  const char le[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(le, 2);
  out << header;
  out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(bytes));
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testing

// Asserts that `expr` throws featprobe::Error with the given code.
#define CHECK_THROWS_CODE(expr, expected_code)                            \
  do {                                                                    \
    bool thrown_ = false;                                                 \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const featprobe::Error& e_) {                                \
      thrown_ = true;                                                     \
      CHECK_MESSAGE(e_.code() == (expected_code), e_.what());             \
    }                                                                     \
    CHECK_MESSAGE(thrown_, "expected featprobe::Error from " #expr);      \
  } while (0)
