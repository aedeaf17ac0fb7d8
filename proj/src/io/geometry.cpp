#include "featprobe/geometry.hpp"

#include <string>

#include "featprobe/error.hpp"

namespace featprobe {

std::string_view spatial_op_name(SpatialOp op) noexcept {
  switch (op) {
    case SpatialOp::kRot90: return "rot90";
    case SpatialOp::kRot180: return "rot180";
    case SpatialOp::kRot270: return "rot270";
    case SpatialOp::kMirrorH: return "mirror_h";
    case SpatialOp::kMirrorV: return "mirror_v";
  }
  return "rot90";
}

SpatialOp parse_spatial_op(std::string_view name) {
  if (name == "rot90" || name == "rotate90") return SpatialOp::kRot90;
  if (name == "rot180" || name == "rotate180") return SpatialOp::kRot180;
  if (name == "rot270" || name == "rotate270") return SpatialOp::kRot270;
  if (name == "mirror_h") return SpatialOp::kMirrorH;
  if (name == "mirror_v") return SpatialOp::kMirrorV;
  throw Error(ErrorCode::kInvalidParameter, "unknown spatial transform '" + std::string(name) + "'");
}

}  // namespace featprobe
