#include "featprobe/io/tensor.hpp"

#include <cmath>

namespace featprobe {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kMalformedHeader: return "malformed_header";
    case ErrorCode::kFortranOrder: return "fortran_order";
    case ErrorCode::kUnsupportedDtype: return "unsupported_dtype";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kSchema: return "schema_violation";
    case ErrorCode::kInvalidParameter: return "invalid_parameter";
    case ErrorCode::kNonExecutable: return "non_executable_manipulation";
    case ErrorCode::kEmptyMask: return "empty_mask";
    case ErrorCode::kEmptySplit: return "empty_split";
    case ErrorCode::kUsage: return "usage_error";
  }
  return "unknown";
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace featprobe
