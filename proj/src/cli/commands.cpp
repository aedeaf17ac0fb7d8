#include "featprobe/cli/commands.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "common.hpp"
#include "featprobe/io/files.hpp"

namespace featprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

Experiment load_experiment(const fs::path& config_path) {
  Experiment ex;
  ex.cfg = load_experiment_config(config_path);
  ex.manifest = io::load_manifest(ex.cfg.manifest);
  if (auto violations = io::validate_manifest(ex.manifest); !violations.empty()) {
    std::string msg = "manifest has " + std::to_string(violations.size()) + " violation(s):";
    for (const auto& v : violations) msg += " " + v + ";";
    throw Error(ErrorCode::kSchema, msg, "/entries");
  }
  ex.backbone = ex.cfg.backbone.value_or(ex.manifest.backbone.value_or("toy"));
  ex.stage = parse_stage(ex.cfg.stage.value_or(ex.manifest.stage.value_or("feat3")));
  ex.manifest.backbone = ex.backbone;
  ex.manifest.stage = std::string(stage_name(ex.stage));
  return ex;
}

std::optional<SpatialOp> resolve_permutation(const Experiment& ex) {
  if (ex.cfg.permutation_mode == PermutationMode::kMappingOnly) return std::nullopt;
  if (ex.cfg.permutation_op) return ex.cfg.permutation_op;
  std::optional<SpatialOp> op;
  for (const auto& e : ex.manifest.entries) {
    SpatialOp this_op;
    try {
      this_op = parse_spatial_op(e.manipulation_id);
    } catch (const Error&) {
      throw Error(ErrorCode::kSchema,
                  "applied_tf needs permutation.op: '" + e.manipulation_id + "' is not a spatial transform",
                  "/permutation");
    }
    if (op && *op != this_op) {
      throw Error(ErrorCode::kSchema, "manifest mixes spatial transforms; set permutation.op",
                  "/permutation");
    }
    op = this_op;
  }
  if (!op) throw Error(ErrorCode::kSchema, "cannot infer permutation.op from an empty manifest", "/permutation");
  return op;
}

fs::path run_dir(const ExperimentConfig& cfg, const std::optional<fs::path>& override_dir) {
  return override_dir ? *override_dir : cfg.output_dir;
}

}  // namespace detail

namespace {

Grid parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) {
      const auto n = std::stoul(text);
      return {n, n};
    }
    return {std::stoul(text.substr(0, x)), std::stoul(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kUsage, "grid must look like 9 or 9x9, got '" + text + "'");
  }
}

std::vector<long> parse_ints(const std::string& text) {
  std::vector<long> values;
  std::size_t start = 0;
  try {
    while (start <= text.size()) {
      const auto end = std::min(text.find(',', start), text.size());
      values.push_back(std::stol(text.substr(start, end - start)));
      start = end + 1;
    }
  } catch (const std::exception&) {
    throw Error(ErrorCode::kUsage, "expected comma-separated integers, got '" + text + "'");
  }
  return values;
}

std::vector<image::Point> parse_polygon(const std::string& text) {
  std::vector<image::Point> pts;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = std::min(text.find(';', start), text.size());
    const std::string item = text.substr(start, end - start);
    const auto xy = parse_ints(item);
    if (xy.size() != 2) throw Error(ErrorCode::kUsage, "polygon vertices look like x,y;x,y;...");
    pts.push_back({xy[0], xy[1]});
    start = end + 1;
  }
  return pts;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message,
                 const std::string& pointer = "") {
  json e = {{"code", code}, {"message", message}};
  if (!pointer.empty()) e["pointer"] = pointer;
  err << json{{"error", e}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"featprobe: learn and analyze feature-space mappings of image manipulations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "featprobe 0.1.0");

  // manipulate
  ManipulateOptions man;
  std::string preset_name, spec_file, kind, polygon_text, fill_text;
  double noise_std = 40.0, hue = 60.0;
  std::uint64_t seed = 0;
  auto* manipulate = app.add_subcommand("manipulate", "Apply one manipulation to every PNG in a directory");
  manipulate->add_option("--in", man.in_dir, "Directory of input PNGs")->required();
  manipulate->add_option("--out", man.out_dir, "Output directory")->required();
  auto* preset_opt = manipulate->add_option("--preset", preset_name, "Catalog preset, e.g. rotate90, mask_top_left");
  auto* spec_opt = manipulate->add_option("--spec", spec_file, "JSON file with a manipulation spec");
  auto* kind_opt = manipulate->add_option("--kind", kind, "Manipulation kind");
  manipulate->add_option("--noise-std", noise_std, "Gaussian noise std (default 40)");
  manipulate->add_option("--hue", hue, "Hue shift in degrees (default 60)");
  manipulate->add_option("--polygon", polygon_text, "Polygon vertices x,y;x,y;...");
  manipulate->add_option("--fill", fill_text, "Polygon fill r,g,b");
  manipulate->add_option("--seed", seed, "Seed for stochastic manipulations");
  preset_opt->excludes(spec_opt)->excludes(kind_opt);
  spec_opt->excludes(kind_opt);

  // featurize
  FeaturizeOptions feat;
  std::string init_kind;
  std::size_t init_channels = 16, init_pool = 1;
  std::uint64_t init_seed = 0;
  bool init_zero_bias = false;
  auto* featurize = app.add_subcommand("featurize", "Run a toy featurizer over a manipulate fragment");
  featurize->add_option("--images", feat.fragment, "fragment.json written by manipulate");
  featurize->add_option("--featurizer", feat.featurizer, "Featurizer bundle directory")->required();
  featurize->add_option("--out", feat.out_dir, "Output directory for features and manifest.json");
  featurize->add_option("--val-fraction", feat.val_fraction, "Share of samples hashed into val");
  featurize->add_option("--test-fraction", feat.test_fraction, "Share of samples hashed into test");
  featurize->add_option("--stage", feat.stage, "Stage tag written to the manifest");
  featurize->add_option("--init-featurizer", init_kind,
                        "Create the featurizer bundle first: pointwise_linear or patch_pool_linear");
  featurize->add_option("--channels", init_channels, "Channels of a new featurizer");
  featurize->add_option("--pool", init_pool, "Pool size of a new patch_pool_linear featurizer");
  featurize->add_option("--featurizer-seed", init_seed, "Seed of a new featurizer");
  featurize->add_flag("--zero-bias", init_zero_bias, "Create the featurizer without bias");

  // train / eval
  fs::path config_path, bundle_path;
  std::optional<fs::path> out_override;
  std::string out_text;
  auto* train = app.add_subcommand("train", "Train a mapping model from an experiment config");
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  train->add_option("--out", out_text, "Run directory (overrides output_dir)");
  auto* eval = app.add_subcommand("eval", "Evaluate a trained bundle on the test split");
  eval->add_option("--config", config_path, "Experiment config JSON")->required();
  eval->add_option("--bundle", bundle_path, "Model bundle (default <run>/model)");
  eval->add_option("--out", out_text, "Run directory (overrides output_dir)");

  // analyze
  AnalyzeOptions an;
  std::string manifest_text;
  auto* analyze = app.add_subcommand("analyze", "SVD spectrum and bias analysis of a linear bundle");
  analyze->add_option("--bundle", an.bundle, "Model bundle directory")->required();
  analyze->add_option("--manifest", manifest_text, "Manifest whose original features feed the bias analysis");
  analyze->add_option("--split", an.split, "train, val, test or all")->check(CLI::IsMember({"train", "val", "test", "all"}));
  analyze->add_option("--features", an.features, "Feature NPY files for the bias analysis");
  analyze->add_option("--out", an.out_dir, "Output directory (default: the bundle's parent)");
  analyze->add_flag("--full-spectrum", an.full_spectrum, "Write every singular value instead of the top 64");
  analyze->add_option("--model-id", an.model_id, "Identifier written to the report");
  analyze->add_option("--manipulation-id", an.manipulation_id, "Manipulation written to the report");

  // mask
  MaskOptionsCli mk;
  std::string grid_text = "9x9", mask_out;
  auto* mask = app.add_subcommand("mask", "Build a change mask for an image pair");
  mask->add_option("--original", mk.original, "Original PNG")->required();
  mask->add_option("--manipulated", mk.manipulated, "Manipulated PNG")->required();
  mask->add_option("--grid", grid_text, "Feature grid, e.g. 9x9");
  mask->add_option("--resolution", mk.mask.resolution, "Resize target (default 288)");
  mask->add_option("--threshold", mk.mask.threshold, "Distance threshold (default 50)");
  mask->add_option("--out", mask_out, "Write the mask JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    print_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (!out_text.empty()) out_override = fs::path(out_text);
    if (*manipulate) {
      if (!preset_name.empty()) {
        man.spec = image::preset(preset_name);
      } else if (!spec_file.empty()) {
        man.spec = image::spec_from_json(io::read_json(spec_file));
      } else if (!kind.empty()) {
        json j = {{"kind", kind}, {"noise_std", noise_std}, {"hue_degrees", hue}};
        if (!polygon_text.empty()) {
          json poly = json::array();
          for (const auto& p : parse_polygon(polygon_text)) poly.push_back({p.x, p.y});
          j["polygon"] = poly;
        }
        if (!fill_text.empty()) j["fill"] = parse_ints(fill_text);
        man.spec = image::spec_from_json(j);
      } else {
        throw Error(ErrorCode::kUsage, "manipulate needs --preset, --spec or --kind");
      }
      if (manipulate->count("--seed")) man.spec.seed = seed;
      if (fs::exists(man.out_dir) && fs::equivalent(man.in_dir, man.out_dir)) {
        throw Error(ErrorCode::kUsage, "--out must differ from --in");
      }
      auto result = cmd_manipulate(man);
      for (const auto& w : result.fragment["warnings"]) err << "warning: " << w.get<std::string>() << "\n";
      out << json{{"written", result.written},
                  {"skipped", result.skipped},
                  {"fragment", (man.out_dir / "fragment.json").string()}}
                 .dump()
          << "\n";
    } else if (*featurize) {
      if (!init_kind.empty()) {
        auto f = synthetic::ToyFeaturizer::create(synthetic::parse_featurizer_kind(init_kind),
                                                  init_channels, init_seed, init_pool, !init_zero_bias);
        synthetic::save_featurizer(f, feat.featurizer);
      }
      if (feat.fragment.empty()) {
        if (init_kind.empty()) throw Error(ErrorCode::kUsage, "featurize needs --images or --init-featurizer");
      } else {
        if (feat.out_dir.empty()) throw Error(ErrorCode::kUsage, "featurize needs --out");
        auto manifest = cmd_featurize(feat);
        out << json{{"entries", manifest.entries.size()},
                    {"manifest", (feat.out_dir / "manifest.json").string()}}
                   .dump()
            << "\n";
      }
    } else if (*train) {
      auto outcome = cmd_train(config_path, out_override);
      out << json{{"run_dir", outcome.run_dir.string()}, {"final_metrics", outcome.report["final_metrics"]}}.dump()
          << "\n";
    } else if (*eval) {
      std::optional<fs::path> bundle;
      if (!bundle_path.empty()) bundle = bundle_path;
      auto report = cmd_eval(config_path, bundle, out_override);
      out << report["summary"].dump() << "\n";
    } else if (*analyze) {
      if (!manifest_text.empty()) an.manifest = fs::path(manifest_text);
      auto report = cmd_analyze(an);
      out << json{{"spectral_entropy", report["spectral_entropy"]},
                  {"effective_rank", report["effective_rank"]},
                  {"input_dominance_ratio", report["input_dominance_ratio"]}}
                 .dump()
          << "\n";
    } else if (*mask) {
      mk.grid = parse_grid(grid_text);
      if (!mask_out.empty()) mk.out = fs::path(mask_out);
      auto m = cmd_mask(mk);
      if (!mk.out) out << m.dump(2) << "\n";
    }
  } catch (const Error& e) {
    print_error(err, std::string(error_code_name(e.code())), e.what(), e.pointer());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace featprobe::cli
