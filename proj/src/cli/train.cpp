#include "common.hpp"
#include "featprobe/cli/commands.hpp"
#include "featprobe/io/files.hpp"
#include "featprobe/mapping/train.hpp"
#include "featprobe/metrics/similarity.hpp"
#include "featprobe/stats.hpp"

namespace featprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

TrainOutcome cmd_train(const fs::path& config_path, const std::optional<fs::path>& out_override) {
  const detail::Experiment ex = detail::load_experiment(config_path);
  const mapping::PairSet train = mapping::load_pairs(ex.manifest, io::Split::kTrain);
  const mapping::PairSet val = mapping::load_pairs(ex.manifest, io::Split::kVal);
  if (train.empty()) throw Error(ErrorCode::kEmptySplit, "empty split: the manifest has no train entries");

  mapping::ModelSpec spec;
  spec.arch = ex.cfg.arch;
  spec.pre_permutation = detail::resolve_permutation(ex);
  spec.normalize_io = ex.cfg.normalize_io;
  spec.backbone = ex.backbone;
  spec.stage = ex.stage;
  mapping::MappingModel model = mapping::build_model(spec, train.originals.front());
  const auto history = mapping::train_mapping(model, train, val, ex.cfg.train);

  json final_metrics = {{"train_loss", history.back().train_loss},
                        {"val_loss", history.back().val_loss ? json(*history.back().val_loss) : json(nullptr)},
                        {"val_mdn_cs_median", nullptr}};
  if (!val.empty()) {
    std::vector<double> cs;
    for (std::size_t i = 0; i < val.size(); ++i) {
      cs.push_back(metrics::mdn_cs(mapping::map_features(model, val.originals[i]), val.targets[i]));
    }
    final_metrics["val_mdn_cs_median"] = median(cs);
  }
  model.final_metrics = final_metrics;

  const fs::path dir = detail::run_dir(ex.cfg, out_override);
  fs::create_directories(dir);
  mapping::save_model(model, dir / "model");
  io::write_file_atomic(dir / "loss_history.csv", mapping::history_csv(history));
  json report = {{"model_id", ex.cfg.model_id},
                 {"model_family", mapping::family_name(model.arch().family)},
                 {"backbone", model.backbone},
                 {"stage", stage_name(model.stage)},
                 {"pre_permutation", model.pre_permutation ? json(spatial_op_name(*model.pre_permutation))
                                                           : json(nullptr)},
                 {"normalize_io", model.normalize_io},
                 {"train_pairs", train.size()},
                 {"val_pairs", val.size()},
                 {"train_config", nn::to_json(ex.cfg.train)},
                 {"architecture", mapping::to_json(model.arch())},
                 {"history", mapping::history_json(history)},
                 {"final_metrics", final_metrics}};
  io::write_json_atomic(dir / "train_report.json", report);
  record_run(dir, "train",
             {{"config", config_path.filename().string()},
              {"config_hash", config_hash(ex.cfg.document)},
              {"seeds", {{"train", ex.cfg.train.seed}, {"init", ex.cfg.arch.init_seed}}},
              {"outputs", {"model", "loss_history.csv", "train_report.json"}}});
  return {dir, report};
}

}  // namespace featprobe::cli
