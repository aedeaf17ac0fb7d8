#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "featprobe/io/tensor.hpp"

namespace featprobe {

enum class Stage { kFeat0, kFeat1, kFeat2, kFeat3, kSwinLast };

std::string_view stage_name(Stage stage) noexcept;
Stage parse_stage(std::string_view name);

// Expected [C,H,W] for known backbone tags ("convnext", "swinv2"); nullopt for
// any other tag or for a stage the backbone does not expose.
std::optional<Shape> expected_feature_shape(std::string_view backbone, Stage stage);

// A [C,H,W] activation map. When `normalized` is set every spatial location
// has unit channel norm and `norms` holds the original per-location norms.
struct FeatureMap {
  Tensor tensor;
  std::string backbone = "toy";
  Stage stage = Stage::kFeat3;
  bool normalized = false;
  std::optional<Tensor> norms;

  std::size_t channels() const { return tensor.dim(0); }
  std::size_t height() const { return tensor.dim(1); }
  std::size_t width() const { return tensor.dim(2); }

  static FeatureMap from_tensor(Tensor t, std::string backbone = "toy", Stage stage = Stage::kFeat3);
};

// Throws kShapeMismatch / kInvalidParameter if the map breaks its invariants.
void validate_feature_map(const FeatureMap& f);

}  // namespace featprobe
