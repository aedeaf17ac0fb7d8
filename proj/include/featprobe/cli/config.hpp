#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "featprobe/geometry.hpp"
#include "featprobe/mapping/network.hpp"
#include "featprobe/metrics/change_mask.hpp"
#include "featprobe/nn/train_config.hpp"

namespace featprobe::cli {

// "applied_tf" reorders feature positions before the mapping; "mapping_only"
// leaves the grid alone.
enum class PermutationMode { kMappingOnly, kAppliedTf };

struct MetricToggles {
  bool masked = true;
  bool ssim = true;
  bool lpips = true;
  bool semantic = true;
  metrics::MaskOptions mask;
};

// One experiment, read from a JSON file. Relative paths resolve against the
// config file's directory.
struct ExperimentConfig {
  std::filesystem::path manifest;
  mapping::ArchConfig arch;  // channels and grid are filled in from the data
  std::optional<std::string> backbone;
  std::optional<std::string> stage;
  std::optional<bool> normalize_io;
  PermutationMode permutation_mode = PermutationMode::kMappingOnly;
  std::optional<SpatialOp> permutation_op;
  nn::TrainConfig train;
  MetricToggles metrics;
  std::optional<std::filesystem::path> classifier_head;
  std::filesystem::path output_dir = "run";
  std::string model_id = "model";
  // The document as read, for provenance hashing.
  nlohmann::json document;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Worker count: hardware concurrency capped by FEATPROBE_THREADS when set.
// Throws kUsage for a malformed value.
std::size_t worker_count();

// Adds `record` under "commands/<command>" of <run_dir>/run.json, keeping the
// entries of earlier commands.
void record_run(const std::filesystem::path& run_dir, const std::string& command,
                const nlohmann::json& record);

// Hex FNV-1a of the compact JSON dump.
std::string config_hash(const nlohmann::json& doc);

nlohmann::json library_versions();

}  // namespace featprobe::cli
