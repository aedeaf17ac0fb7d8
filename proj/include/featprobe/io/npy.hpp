#pragma once

#include <filesystem>
#include <string>

#include "featprobe/io/tensor.hpp"

namespace featprobe::io {

// NPY v1.0 reader. Accepts little-endian '<f4' and '<f8' payloads in C order.
// float64 payloads are narrowed with round-to-nearest-even (static_cast).
// Non-finite values are rejected.
Tensor load_tensor(const std::filesystem::path& path);

// Reads a payload at float64 precision (float32 files are widened exactly).
Tensor64 load_tensor64(const std::filesystem::path& path);

// Writes '<f4' (or '<f8' for Tensor64). The preamble is space-padded to a
// multiple of 64 bytes like numpy's own writer, so typical headers are 128.
void save_tensor(const Tensor& tensor, const std::filesystem::path& path);
void save_tensor(const Tensor64& tensor, const std::filesystem::path& path);

// Shape from the header only; validates the header like load_tensor.
Shape read_npy_shape(const std::filesystem::path& path);

// Header text as written by save_tensor, exposed for format tests.
std::string npy_header(const std::string& descr, const Shape& shape);

}  // namespace featprobe::io
