#include "featprobe/analysis/report.hpp"
#include "featprobe/cli/commands.hpp"
#include "featprobe/cli/config.hpp"
#include "featprobe/io/files.hpp"
#include "featprobe/io/npy.hpp"
#include "featprobe/mapping/model.hpp"

namespace featprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json cmd_analyze(const AnalyzeOptions& opts) {
  const mapping::MappingModel model = mapping::load_model(opts.bundle);
  const analysis::SvdReport svd = analysis::svd_analyze(model.linear_weight());

  // Bias analysis runs on what the linear layer actually sees: reordered and,
  // for normalized stages, unit-length vectors.
  std::vector<FeatureMap> samples;
  std::string manipulation_id = opts.manipulation_id;
  auto add_sample = [&](const fs::path& path) {
    FeatureMap f = FeatureMap::from_tensor(io::load_tensor(path), model.backbone, model.stage);
    FeatureMap seen;
    seen.tensor = mapping::prepare_input(model, f).tensor;
    samples.push_back(std::move(seen));
  };
  if (opts.manifest) {
    const io::PairManifest manifest = io::load_manifest(*opts.manifest);
    for (const auto& e : manifest.entries) {
      if (opts.split != "all" && io::split_name(e.split) != opts.split) continue;
      add_sample(manifest.resolve(e.original_feature_path));
      if (manipulation_id.empty()) manipulation_id = e.manipulation_id;
    }
  }
  for (const auto& p : opts.features) add_sample(p);
  std::optional<analysis::BiasReport> bias;
  if (!samples.empty()) bias = analysis::bias_analyze(model.linear_weight(), model.linear_bias(), samples);

  const std::string model_id = opts.model_id.empty() ? opts.bundle.filename().string() : opts.model_id;
  const json report = analysis::analysis_json(
      {model_id, std::string(stage_name(model.stage)), manipulation_id.empty() ? "unknown" : manipulation_id},
      svd, bias, opts.full_spectrum ? 0 : 64);
  const fs::path out = opts.out_dir.empty() ? opts.bundle.parent_path() : opts.out_dir;
  fs::create_directories(out);
  const auto table = analysis::spectrum_curves({{manipulation_id.empty() ? model_id : manipulation_id + "/" +
                                                     std::string(stage_name(model.stage)),
                                                 svd}});
  io::write_json_atomic(out / "analysis.json", report);
  io::write_file_atomic(out / "spectrum.csv", analysis::to_csv(table));
  io::write_json_atomic(out / "spectrum.json", analysis::to_json(table));
  record_run(out, "analyze",
             {{"bundle", opts.bundle.filename().string()},
              {"samples", samples.size()},
              {"outputs", {"analysis.json", "spectrum.csv", "spectrum.json"}}});
  return report;
}

}  // namespace featprobe::cli
