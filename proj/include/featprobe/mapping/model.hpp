#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "featprobe/geometry.hpp"
#include "featprobe/io/feature_map.hpp"
#include "featprobe/mapping/network.hpp"

namespace featprobe::mapping {

// Earlier ConvNeXt stages train on unit-normalized vectors; feat3 and the
// Swin output stage train on raw features.
bool default_normalize_io(std::string_view backbone, Stage stage);

// What to build before the data is seen. Zero channels/grid are filled in
// from the first training sample; an unset normalize_io follows the stage
// policy above.
struct ModelSpec {
  ArchConfig arch;
  std::optional<SpatialOp> pre_permutation;
  std::optional<bool> normalize_io;
  std::string backbone = "toy";
  Stage stage = Stage::kFeat3;
};

// A mapping network plus the reordering and normalization applied around it.
struct MappingModel {
  std::optional<SpatialOp> pre_permutation;
  bool normalize_io = false;
  std::string backbone = "toy";
  Stage stage = Stage::kFeat3;
  MappingNet<float> net;
  // Free-form provenance carried into meta.json.
  nlohmann::json train_config;
  nlohmann::json final_metrics;

  explicit MappingModel(MappingNet<float> network) : net(std::move(network)) {}

  const ArchConfig& arch() const { return net.arch(); }
  std::size_t channels() const { return net.arch().channels; }

  // W [C,C] and b [C] of a linear-family model; kInvalidParameter otherwise.
  const Tensor& linear_weight() const;
  const Tensor& linear_bias() const;
};

// Resolves a ModelSpec against a sample feature map and initializes weights.
MappingModel build_model(ModelSpec spec, const FeatureMap& sample);

// Network-space view of one map: permuted, then normalized when the model
// asks for it. `norms` are the divisors in the permuted grid.
struct PreparedInput {
  Tensor tensor;
  std::optional<Tensor> norms;
  std::size_t zero_norm_locations = 0;
};

PreparedInput prepare_input(const MappingModel& model, const FeatureMap& f);
// Training target in network space: unit-normalized iff normalize_io.
Tensor prepare_target(const MappingModel& model, const FeatureMap& target);

// Full inference pipeline: reorder, normalize, run the network, denormalize.
// The output lives in the original (unnormalized) feature space.
FeatureMap map_features(const MappingModel& model, const FeatureMap& f,
                        nn::Mode mode = nn::Mode::kEval, std::uint64_t seed = 0);

// Bundle directory: meta.json plus one <name>.npy per parameter and buffer.
void save_model(const MappingModel& model, const std::filesystem::path& dir);
MappingModel load_model(const std::filesystem::path& dir);
nlohmann::json model_meta(const MappingModel& model);

}  // namespace featprobe::mapping
