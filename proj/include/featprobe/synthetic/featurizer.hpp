#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "featprobe/image/image.hpp"
#include "featprobe/io/feature_map.hpp"

namespace featprobe::synthetic {

enum class FeaturizerKind { kPointwiseLinear, kPatchPoolLinear };

std::string_view featurizer_kind_name(FeaturizerKind kind) noexcept;
FeaturizerKind parse_featurizer_kind(std::string_view name);

// A fixed random 1x1 convolution on RGB/255, optionally after p x p average
// pooling. Weights are N(0,1), biases N(0,0.1^2), both drawn from `seed`.
struct ToyFeaturizer {
  FeaturizerKind kind = FeaturizerKind::kPointwiseLinear;
  std::size_t pool = 1;
  std::uint64_t seed = 0;
  Tensor weight;  // [C,3]
  Tensor bias;    // [C]

  std::size_t channels() const { return weight.dim(0); }

  static ToyFeaturizer create(FeaturizerKind kind, std::size_t channels, std::uint64_t seed,
                              std::size_t pool = 1, bool with_bias = true);
};

// [C, H/p, W/p] map tagged with backbone "toy". Throws kShapeMismatch when the
// image size is not divisible by the pool size.
FeatureMap featurize(const ToyFeaturizer& f, const image::Image& img);

// Bundle directory: meta.json plus weight.npy and bias.npy.
void save_featurizer(const ToyFeaturizer& f, const std::filesystem::path& dir);
ToyFeaturizer load_featurizer(const std::filesystem::path& dir);

}  // namespace featprobe::synthetic
