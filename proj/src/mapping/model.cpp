#include "featprobe/mapping/model.hpp"

#include "featprobe/io/files.hpp"
#include "featprobe/io/npy.hpp"
#include "featprobe/mapping/normalization.hpp"
#include "featprobe/mapping/permutation.hpp"

namespace featprobe::mapping {

namespace fs = std::filesystem;

namespace {

constexpr const char* kBundleFormat = "featprobe-mapping-bundle";

// Writes every parameter and batchnorm buffer under a flat name list.
std::vector<std::pair<std::string, const Tensor*>> bundle_tensors(const MappingModel& m) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (const auto& p : m.net.parameters()) out.emplace_back(p.name, &p.value());
  const auto& bn = m.net.batchnorm_states();
  for (std::size_t i = 0; i < bn.size(); ++i) {
    const std::string prefix = bn.size() == 1 ? "bn" : "bn" + std::to_string(i);
    out.emplace_back(prefix + ".running_mean", &bn[i].running_mean);
    out.emplace_back(prefix + ".running_var", &bn[i].running_var);
  }
  return out;
}

FeatureMap raw_view(const FeatureMap& f) {
  return f.normalized ? denormalize_locations(f) : f;
}

}  // namespace

bool default_normalize_io(std::string_view backbone, Stage stage) {
  return backbone == "convnext" &&
         (stage == Stage::kFeat0 || stage == Stage::kFeat1 || stage == Stage::kFeat2);
}

const Tensor& MappingModel::linear_weight() const {
  if (arch().family != Family::kLinear) {
    throw Error(ErrorCode::kInvalidParameter, "weight analysis needs a linear-family model");
  }
  return net.parameter("linear.weight").value();
}

const Tensor& MappingModel::linear_bias() const {
  if (arch().family != Family::kLinear) {
    throw Error(ErrorCode::kInvalidParameter, "weight analysis needs a linear-family model");
  }
  return net.parameter("linear.bias").value();
}

MappingModel build_model(ModelSpec spec, const FeatureMap& sample) {
  ArchConfig arch = spec.arch;
  if (arch.channels == 0) arch.channels = sample.channels();
  if (arch.channels != sample.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "model expects " + std::to_string(arch.channels) +
                                               " channels, features have " +
                                               std::to_string(sample.channels()));
  }
  Grid grid{sample.height(), sample.width()};
  if (spec.pre_permutation) grid = transformed_grid(*spec.pre_permutation, grid);
  if (arch.grid_h == 0 && arch.grid_w == 0) {
    arch.grid_h = grid.rows;
    arch.grid_w = grid.cols;
  }
  MappingModel model{MappingNet<float>(arch)};
  model.pre_permutation = spec.pre_permutation;
  model.normalize_io = spec.normalize_io.value_or(default_normalize_io(spec.backbone, spec.stage));
  model.backbone = spec.backbone;
  model.stage = spec.stage;
  return model;
}

PreparedInput prepare_input(const MappingModel& model, const FeatureMap& f) {
  if (f.channels() != model.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "model expects " + std::to_string(model.channels()) +
                                               " channels, got " + std::to_string(f.channels()));
  }
  FeatureMap view = f;
  if (model.pre_permutation) {
    view = permute_features(view, {*model.pre_permutation, Grid{f.height(), f.width()}});
  }
  PreparedInput out;
  if (model.normalize_io) {
    if (view.normalized) {
      out.tensor = view.tensor;
      out.norms = view.norms;
    } else {
      NormalizedMap n = normalize_locations(view);
      out.tensor = std::move(n.map.tensor);
      out.norms = std::move(n.map.norms);
      out.zero_norm_locations = n.zero_norm_locations;
    }
  } else {
    out.tensor = raw_view(view).tensor;
  }
  return out;
}

Tensor prepare_target(const MappingModel& model, const FeatureMap& target) {
  if (model.normalize_io) {
    if (target.normalized) return target.tensor;
    return normalize_locations(target).map.tensor;
  }
  return raw_view(target).tensor;
}

FeatureMap map_features(const MappingModel& model, const FeatureMap& f, nn::Mode mode,
                        std::uint64_t seed) {
  PreparedInput in = prepare_input(model, f);
  const Shape s = in.tensor.shape();
  Tensor y = model.net.predict(in.tensor.reshaped({1, s[0], s[1], s[2]}), mode, seed).reshaped(s);
  FeatureMap out;
  out.backbone = f.backbone;
  out.stage = f.stage;
  out.tensor = in.norms ? scale_locations(y, *in.norms, false) : std::move(y);
  return out;
}

nlohmann::json model_meta(const MappingModel& m) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : m.net.parameters()) {
    params.push_back({{"name", p.name}, {"shape", p.value().shape()}});
  }
  nlohmann::json buffers = nlohmann::json::array();
  auto tensors = bundle_tensors(m);
  for (std::size_t i = m.net.parameters().size(); i < tensors.size(); ++i) {
    buffers.push_back({{"name", tensors[i].first}, {"shape", tensors[i].second->shape()}});
  }
  return {{"format", kBundleFormat},
          {"version", 1},
          {"architecture", to_json(m.arch())},
          {"pre_permutation", m.pre_permutation
                                  ? nlohmann::json(spatial_op_name(*m.pre_permutation))
                                  : nlohmann::json(nullptr)},
          {"normalize_io", m.normalize_io},
          {"backbone", m.backbone},
          {"stage", stage_name(m.stage)},
          {"train_config", m.train_config},
          {"final_metrics", m.final_metrics},
          {"parameters", params},
          {"buffers", buffers}};
}

void save_model(const MappingModel& model, const fs::path& dir) {
  io::write_directory_atomic(dir, [&](const fs::path& tmp) {
    for (const auto& [name, tensor] : bundle_tensors(model)) {
      io::save_tensor(*tensor, tmp / (name + ".npy"));
    }
    io::write_json_atomic(tmp / "meta.json", model_meta(model));
  });
}

MappingModel load_model(const fs::path& dir) {
  const nlohmann::json meta = io::read_json(dir / "meta.json");
  if (!meta.is_object() || meta.value("format", "") != kBundleFormat) {
    throw Error(ErrorCode::kSchema, "not a mapping bundle: " + dir.string(), "/format");
  }
  ArchConfig arch = arch_from_json(meta.at("architecture"), "/architecture");
  MappingModel model{MappingNet<float>(arch)};
  try {
    const auto& perm = meta.at("pre_permutation");
    if (!perm.is_null()) model.pre_permutation = parse_spatial_op(perm.get<std::string>());
    model.normalize_io = meta.at("normalize_io").get<bool>();
    model.backbone = meta.at("backbone").get<std::string>();
    model.stage = parse_stage(meta.at("stage").get<std::string>());
    model.train_config = meta.value("train_config", nlohmann::json());
    model.final_metrics = meta.value("final_metrics", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad bundle metadata: ") + e.what());
  }

  auto load_into = [&](const std::string& name, Tensor& slot) {
    Tensor t = io::load_tensor(dir / (name + ".npy"));
    if (t.shape() != slot.shape()) {
      throw Error(ErrorCode::kShapeMismatch, "bundle tensor " + name + " has shape " +
                                                 shape_to_string(t.shape()) + ", expected " +
                                                 shape_to_string(slot.shape()));
    }
    slot = std::move(t);
  };
  for (auto& p : model.net.parameters()) load_into(p.name, p.value());
  auto& bn = model.net.batchnorm_states();
  for (std::size_t i = 0; i < bn.size(); ++i) {
    const std::string prefix = bn.size() == 1 ? "bn" : "bn" + std::to_string(i);
    load_into(prefix + ".running_mean", bn[i].running_mean);
    load_into(prefix + ".running_var", bn[i].running_var);
  }
  return model;
}

}  // namespace featprobe::mapping
