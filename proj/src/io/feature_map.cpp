#include "featprobe/io/feature_map.hpp"

#include <cmath>

namespace featprobe {

std::string_view stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::kFeat0: return "feat0";
    case Stage::kFeat1: return "feat1";
    case Stage::kFeat2: return "feat2";
    case Stage::kFeat3: return "feat3";
    case Stage::kSwinLast: return "swin_last";
  }
  return "feat3";
}

Stage parse_stage(std::string_view name) {
  if (name == "feat0") return Stage::kFeat0;
  if (name == "feat1") return Stage::kFeat1;
  if (name == "feat2") return Stage::kFeat2;
  if (name == "feat3") return Stage::kFeat3;
  if (name == "swin_last") return Stage::kSwinLast;
  throw Error(ErrorCode::kInvalidParameter, "unknown stage '" + std::string(name) + "'");
}

std::optional<Shape> expected_feature_shape(std::string_view backbone, Stage stage) {
  if (backbone == "convnext") {
    switch (stage) {
      case Stage::kFeat0: return Shape{128, 72, 72};
      case Stage::kFeat1: return Shape{256, 36, 36};
      case Stage::kFeat2: return Shape{512, 18, 18};
      case Stage::kFeat3: return Shape{1024, 9, 9};
      case Stage::kSwinLast: return std::nullopt;
    }
  }
  if (backbone == "swinv2" && stage == Stage::kSwinLast) return Shape{1024, 12, 12};
  return std::nullopt;
}

FeatureMap FeatureMap::from_tensor(Tensor t, std::string backbone, Stage stage) {
  FeatureMap f;
  f.tensor = std::move(t);
  f.backbone = std::move(backbone);
  f.stage = stage;
  validate_feature_map(f);
  return f;
}

void validate_feature_map(const FeatureMap& f) {
  if (f.tensor.rank() != 3) {
    throw Error(ErrorCode::kShapeMismatch,
                "feature map must be [C,H,W], got " + shape_to_string(f.tensor.shape()));
  }
  if (auto expected = expected_feature_shape(f.backbone, f.stage);
      expected && *expected != f.tensor.shape()) {
    throw Error(ErrorCode::kShapeMismatch, f.backbone + "/" + std::string(stage_name(f.stage)) +
                                               " expects " + shape_to_string(*expected) + ", got " +
                                               shape_to_string(f.tensor.shape()));
  }
  if (f.normalized) {
    if (!f.norms || f.norms->shape() != Shape{f.height(), f.width()}) {
      throw Error(ErrorCode::kInvalidParameter, "normalized feature map lacks [H,W] norms");
    }
    const std::size_t hw = f.height() * f.width();
    for (std::size_t loc = 0; loc < hw; ++loc) {
      double sq = 0.0;
      for (std::size_t c = 0; c < f.channels(); ++c) {
        double v = f.tensor[c * hw + loc];
        sq += v * v;
      }
      // Zero vectors stay zero under normalization and are flagged there.
      if (sq != 0.0 && std::abs(std::sqrt(sq) - 1.0) > 1e-4) {
        throw Error(ErrorCode::kInvalidParameter,
                    "normalized feature map has non-unit vector at location " + std::to_string(loc));
      }
    }
  }
}

}  // namespace featprobe
