#include "featprobe/cli/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <set>
#include <thread>

#include <Eigen/Core>
#include <png.h>

#include "featprobe/io/feature_map.hpp"
#include "featprobe/io/files.hpp"

namespace featprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& pointer, const std::string& what) {
  throw Error(ErrorCode::kSchema, "config error at " + (pointer.empty() ? "/" : pointer) + ": " + what,
              pointer);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& pointer) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) config_error(pointer + "/" + key, "unknown key");
  }
}

template <typename T>
T get_as(const json& obj, const std::string& key, const std::string& pointer) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(pointer + "/" + key, e.what());
  }
}

void parse_architecture(const json& j, mapping::ArchConfig& arch, const std::string& pointer) {
  if (!j.is_object()) config_error(pointer, "expected object");
  reject_unknown(j, {"hidden", "heads", "layers", "ffn", "dropout", "identity_init", "init_seed"},
                 pointer);
  if (j.contains("hidden")) arch.hidden = get_as<std::size_t>(j, "hidden", pointer);
  if (j.contains("heads")) arch.heads = get_as<std::size_t>(j, "heads", pointer);
  if (j.contains("layers")) arch.layers = get_as<std::size_t>(j, "layers", pointer);
  if (j.contains("ffn")) arch.ffn = get_as<std::size_t>(j, "ffn", pointer);
  if (j.contains("dropout")) arch.dropout = get_as<double>(j, "dropout", pointer);
  if (j.contains("identity_init")) arch.identity_init = get_as<bool>(j, "identity_init", pointer);
  if (j.contains("init_seed")) arch.init_seed = get_as<std::uint64_t>(j, "init_seed", pointer);
}

void parse_metrics(const json& j, MetricToggles& m, const std::string& pointer) {
  if (!j.is_object()) config_error(pointer, "expected object");
  reject_unknown(j, {"masked", "ssim", "lpips", "semantic", "mask_resolution", "mask_threshold"},
                 pointer);
  if (j.contains("masked")) m.masked = get_as<bool>(j, "masked", pointer);
  if (j.contains("ssim")) m.ssim = get_as<bool>(j, "ssim", pointer);
  if (j.contains("lpips")) m.lpips = get_as<bool>(j, "lpips", pointer);
  if (j.contains("semantic")) m.semantic = get_as<bool>(j, "semantic", pointer);
  if (j.contains("mask_resolution")) {
    m.mask.resolution = get_as<std::size_t>(j, "mask_resolution", pointer);
  }
  if (j.contains("mask_threshold")) m.mask.threshold = get_as<double>(j, "mask_threshold", pointer);
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) config_error("", "config must be a JSON object");
  reject_unknown(doc,
                 {"manifest", "family", "backbone", "stage", "normalize_io", "permutation",
                  "architecture", "train", "metrics", "classifier_head", "output_dir", "model_id"},
                 "");
  ExperimentConfig cfg;
  cfg.document = doc;
  if (!doc.contains("manifest")) config_error("/manifest", "missing required key");
  if (!doc.contains("family")) config_error("/family", "missing required key");
  cfg.manifest = base_dir / get_as<std::string>(doc, "manifest", "");
  try {
    cfg.arch.family = mapping::parse_family(get_as<std::string>(doc, "family", ""));
  } catch (const Error& e) {
    config_error("/family", e.what());
  }
  if (doc.contains("backbone")) cfg.backbone = get_as<std::string>(doc, "backbone", "");
  if (doc.contains("stage")) {
    cfg.stage = get_as<std::string>(doc, "stage", "");
    try {
      parse_stage(*cfg.stage);
    } catch (const Error& e) {
      config_error("/stage", e.what());
    }
  }
  if (cfg.backbone && cfg.stage && (*cfg.backbone == "convnext" || *cfg.backbone == "swinv2") &&
      !expected_feature_shape(*cfg.backbone, parse_stage(*cfg.stage))) {
    config_error("/stage", *cfg.backbone + " has no stage " + *cfg.stage);
  }
  if (doc.contains("normalize_io") && !doc["normalize_io"].is_null()) {
    cfg.normalize_io = get_as<bool>(doc, "normalize_io", "");
  }
  if (doc.contains("permutation")) {
    const json& p = doc["permutation"];
    if (p.is_string()) {
      const auto mode = p.get<std::string>();
      if (mode == "applied_tf") {
        cfg.permutation_mode = PermutationMode::kAppliedTf;
      } else if (mode != "mapping_only") {
        config_error("/permutation", "expected applied_tf or mapping_only");
      }
    } else if (p.is_object()) {
      reject_unknown(p, {"mode", "op"}, "/permutation");
      const auto mode = p.contains("mode") ? get_as<std::string>(p, "mode", "/permutation")
                                           : std::string("applied_tf");
      if (mode == "applied_tf") {
        cfg.permutation_mode = PermutationMode::kAppliedTf;
      } else if (mode != "mapping_only") {
        config_error("/permutation/mode", "expected applied_tf or mapping_only");
      }
      if (p.contains("op")) {
        try {
          cfg.permutation_op = parse_spatial_op(get_as<std::string>(p, "op", "/permutation"));
        } catch (const Error& e) {
          config_error("/permutation/op", e.what());
        }
      }
    } else {
      config_error("/permutation", "expected string or object");
    }
  }
  if (doc.contains("architecture")) parse_architecture(doc["architecture"], cfg.arch, "/architecture");
  if (doc.contains("train")) {
    try {
      cfg.train = nn::train_config_from_json(doc["train"], "/train");
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kSchema) throw;
      config_error("/train", e.what());
    }
  }
  try {
    cfg.train.validate();
  } catch (const Error& e) {
    config_error("/train", e.what());
  }
  if (doc.contains("metrics")) parse_metrics(doc["metrics"], cfg.metrics, "/metrics");
  if (doc.contains("classifier_head") && !doc["classifier_head"].is_null()) {
    cfg.classifier_head = base_dir / get_as<std::string>(doc, "classifier_head", "");
  }
  if (doc.contains("output_dir")) cfg.output_dir = base_dir / get_as<std::string>(doc, "output_dir", "");
  else cfg.output_dir = base_dir / "run";
  if (doc.contains("model_id")) cfg.model_id = get_as<std::string>(doc, "model_id", "");

  if (!fs::exists(cfg.manifest)) {
    throw Error(ErrorCode::kIo, "manifest not found: " + cfg.manifest.string(), "/manifest");
  }
  if (cfg.classifier_head && !fs::exists(*cfg.classifier_head)) {
    throw Error(ErrorCode::kIo, "classifier head not found: " + cfg.classifier_head->string(),
                "/classifier_head");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(io::read_json(path), path.parent_path());
}

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FEATPROBE_THREADS"); env && *env) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (*end != '\0' || cap < 1) {
      throw Error(ErrorCode::kUsage, "FEATPROBE_THREADS must be a positive integer, got '" +
                                         std::string(env) + "'");
    }
    n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

std::string config_hash(const json& doc) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(io::fnv1a64(doc.dump())));
  return buf;
}

json library_versions() {
  return {{"featprobe", "0.1.0"},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"libpng", PNG_LIBPNG_VER_STRING}};
}

void record_run(const fs::path& run_dir, const std::string& command, const json& record) {
  const fs::path path = run_dir / "run.json";
  json doc = fs::exists(path) ? io::read_json(path) : json::object();
  if (!doc.is_object()) doc = json::object();
  doc["tool"] = "featprobe";
  doc["versions"] = library_versions();
  doc["commands"][command] = record;
  io::write_json_atomic(path, doc);
}

}  // namespace featprobe::cli
