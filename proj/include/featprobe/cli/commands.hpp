#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featprobe/image/ops.hpp"
#include "featprobe/io/manifest.hpp"
#include "featprobe/metrics/change_mask.hpp"
#include "featprobe/synthetic/featurizer.hpp"

namespace featprobe::cli {

// Entry point behind the featprobe binary. Failures print
// {"error":{"code","message","pointer"}} to `err` and return nonzero.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct ManipulateOptions {
  std::filesystem::path in_dir;
  std::filesystem::path out_dir;
  image::ManipulationSpec spec;
};

struct ManipulateResult {
  // {"manipulation_id","spec","pairs":[...],"skipped":[...]} written to
  // <out_dir>/fragment.json. Paths are relative to out_dir.
  nlohmann::json fragment;
  std::size_t written = 0;
  std::size_t skipped = 0;
};

// PNGs in in_dir are processed in file-name order; the noise stream of each
// image is its position in that order. Throws kIo when every input fails.
ManipulateResult cmd_manipulate(const ManipulateOptions& opts);

struct FeaturizeOptions {
  std::filesystem::path fragment;
  std::filesystem::path featurizer;
  std::filesystem::path out_dir;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  std::string stage = "feat3";
};

// Featurizes every pair of a manipulate fragment and writes
// <out_dir>/manifest.json plus features/<sample>.{orig,target}.npy. Splits are
// assigned from a hash of the sample id.
io::PairManifest cmd_featurize(const FeaturizeOptions& opts);

io::Split split_for(const std::string& sample_id, double val_fraction, double test_fraction);

struct TrainOutcome {
  std::filesystem::path run_dir;
  nlohmann::json report;
};

// Writes <run>/model/, <run>/loss_history.csv, <run>/train_report.json and
// run.json. `out_override` replaces the configured output directory.
TrainOutcome cmd_train(const std::filesystem::path& config_path,
                       const std::optional<std::filesystem::path>& out_override = std::nullopt);

// Evaluates every test entry; writes <run>/eval_report.json. The bundle
// defaults to <run>/model. Throws kEmptySplit for an empty test split.
nlohmann::json cmd_eval(const std::filesystem::path& config_path,
                        const std::optional<std::filesystem::path>& bundle = std::nullopt,
                        const std::optional<std::filesystem::path>& out_override = std::nullopt);

struct AnalyzeOptions {
  std::filesystem::path bundle;
  std::optional<std::filesystem::path> manifest;
  std::string split = "all";  // train|val|test|all
  std::vector<std::filesystem::path> features;
  std::filesystem::path out_dir;
  bool full_spectrum = false;
  std::string model_id;
  std::string manipulation_id;
};

// Writes analysis.json, spectrum.csv and spectrum.json into out_dir.
nlohmann::json cmd_analyze(const AnalyzeOptions& opts);

struct MaskOptionsCli {
  std::filesystem::path original;
  std::filesystem::path manipulated;
  Grid grid;
  metrics::MaskOptions mask;
  std::optional<std::filesystem::path> out;
};

nlohmann::json cmd_mask(const MaskOptionsCli& opts);

}  // namespace featprobe::cli
