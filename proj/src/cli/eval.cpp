#include <exception>
#include <thread>

#include "common.hpp"
#include "featprobe/cli/commands.hpp"
#include "featprobe/io/files.hpp"
#include "featprobe/io/npy.hpp"
#include "featprobe/mapping/model.hpp"
#include "featprobe/metrics/classifier.hpp"
#include "featprobe/metrics/perceptual.hpp"
#include "featprobe/metrics/report.hpp"
#include "featprobe/metrics/similarity.hpp"
#include "featprobe/metrics/ssim.hpp"

namespace featprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct EvalContext {
  const detail::Experiment& ex;
  const mapping::MappingModel& model;
  const std::optional<metrics::ClassifierHead>& head;
};

metrics::MetricRecord evaluate_entry(const EvalContext& ctx, const io::PairEntry& e) {
  const auto& m = ctx.ex.manifest;
  const auto& toggles = ctx.ex.cfg.metrics;
  const FeatureMap original = FeatureMap::from_tensor(
      io::load_tensor(m.resolve(e.original_feature_path)), ctx.ex.backbone, ctx.ex.stage);
  const FeatureMap target = FeatureMap::from_tensor(
      io::load_tensor(m.resolve(e.target_feature_path)), ctx.ex.backbone, ctx.ex.stage);
  const FeatureMap mapped = mapping::map_features(ctx.model, original);

  metrics::MetricRecord r;
  r.sample_id = e.sample_id;
  r.manipulation_id = e.manipulation_id;
  r.stage = std::string(stage_name(ctx.ex.stage));
  r.model_family = std::string(mapping::family_name(ctx.model.arch().family));
  r.mdn_cs = metrics::mdn_cs(mapped, target);

  if (toggles.masked && e.original_image_path && e.manipulated_image_path) {
    const auto orig = image::read_png(m.resolve(*e.original_image_path)).image;
    const auto manip = image::read_png(m.resolve(*e.manipulated_image_path)).image;
    const auto mask = metrics::build_change_mask(orig, manip, Grid{target.height(), target.width()},
                                                 toggles.mask);
    r.mask_cells = mask.count();
    if (mask.count() > 0) r.masked_mdn_cs = metrics::mdn_cs(mapped, target, &mask);
  }
  if (toggles.ssim && e.reconstructed_image_path && e.manipulated_image_path) {
    r.ssim = metrics::ssim(image::read_png(m.resolve(*e.reconstructed_image_path)).image,
                           image::read_png(m.resolve(*e.manipulated_image_path)).image);
  }
  if (toggles.lpips && e.reconstructed_stack_path && e.target_stack_path) {
    r.lpips = metrics::lpips_distance(metrics::load_perceptual_stack(m.resolve(*e.reconstructed_stack_path)),
                                      metrics::load_perceptual_stack(m.resolve(*e.target_stack_path)));
  }
  if (toggles.semantic && ctx.head) {
    const auto p = metrics::classify(*ctx.head, mapped);
    const auto q = metrics::classify(*ctx.head, target);
    r.agreement = metrics::argmax(p) == metrics::argmax(q);
    r.jsd = metrics::jsd(p, q);
    if (e.label) r.top1 = static_cast<int>(metrics::argmax(p)) == *e.label;
  }
  return r;
}

// Fans entries out over worker threads; results and errors land in entry
// order, so the report does not depend on scheduling.
std::vector<metrics::MetricRecord> evaluate_all(const EvalContext& ctx,
                                                const std::vector<const io::PairEntry*>& entries) {
  const std::size_t n = entries.size();
  std::vector<metrics::MetricRecord> records(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::min(worker_count(), n);
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < n; i += workers) {
      try {
        records[i] = evaluate_entry(ctx, *entries[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

}  // namespace

json cmd_eval(const fs::path& config_path, const std::optional<fs::path>& bundle,
              const std::optional<fs::path>& out_override) {
  const detail::Experiment ex = detail::load_experiment(config_path);
  const fs::path dir = detail::run_dir(ex.cfg, out_override);
  const fs::path bundle_dir = bundle.value_or(dir / "model");
  const mapping::MappingModel model = mapping::load_model(bundle_dir);
  if (model.backbone != ex.backbone || model.stage != ex.stage) {
    throw Error(ErrorCode::kShapeMismatch, "bundle was trained on " + model.backbone + "/" +
                                               std::string(stage_name(model.stage)) +
                                               " but the experiment evaluates " + ex.backbone + "/" +
                                               std::string(stage_name(ex.stage)));
  }
  const auto entries = ex.manifest.split(io::Split::kTest);
  if (entries.empty()) throw Error(ErrorCode::kEmptySplit, "empty split: the manifest has no test entries");

  std::optional<metrics::ClassifierHead> head;
  if (ex.cfg.classifier_head && ex.cfg.metrics.semantic) {
    head = metrics::load_classifier_head(*ex.cfg.classifier_head);
  }
  const auto records = evaluate_all({ex, model, head}, entries);

  json rows = json::array();
  for (const auto& r : records) rows.push_back(metrics::to_json(r));
  json report = {{"model_id", ex.cfg.model_id},
                 {"model", {{"family", mapping::family_name(model.arch().family)},
                            {"backbone", model.backbone},
                            {"stage", stage_name(model.stage)},
                            {"pre_permutation", model.pre_permutation
                                                    ? json(spatial_op_name(*model.pre_permutation))
                                                    : json(nullptr)},
                            {"normalize_io", model.normalize_io}}},
                 {"split", "test"},
                 {"mask", {{"resolution", ex.cfg.metrics.mask.resolution},
                           {"threshold", ex.cfg.metrics.mask.threshold},
                           {"kernel", ex.cfg.metrics.mask.kernel},
                           {"sigma", ex.cfg.metrics.mask.sigma}}},
                 {"summary", metrics::summarize(records)},
                 {"records", rows}};
  fs::create_directories(dir);
  io::write_json_atomic(dir / "eval_report.json", report);
  record_run(dir, "eval",
             {{"config", config_path.filename().string()},
              {"config_hash", config_hash(ex.cfg.document)},
              {"threads", worker_count()},
              {"test_entries", entries.size()},
              {"outputs", {"eval_report.json"}}});
  return report;
}

}  // namespace featprobe::cli
