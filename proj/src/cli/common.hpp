#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "featprobe/cli/config.hpp"
#include "featprobe/io/feature_map.hpp"
#include "featprobe/io/manifest.hpp"

namespace featprobe::cli::detail {

struct Experiment {
  ExperimentConfig cfg;
  io::PairManifest manifest;
  std::string backbone;
  Stage stage = Stage::kFeat3;
};

// Loads the config and its manifest. Manifest violations raise kSchema with
// every violation in the message. Config backbone/stage override the
// manifest's.
Experiment load_experiment(const std::filesystem::path& config_path);

// The reordering to apply, or nullopt for mapping_only. Without an explicit
// op the manifest's manipulation ids must name one spatial transform.
std::optional<SpatialOp> resolve_permutation(const Experiment& ex);

std::filesystem::path run_dir(const ExperimentConfig& cfg,
                              const std::optional<std::filesystem::path>& override_dir);

}  // namespace featprobe::cli::detail
