#include "featprobe/metrics/perceptual.hpp"

#include <cmath>

#include "featprobe/io/files.hpp"
#include "featprobe/io/npy.hpp"
#include "featprobe/nn/loss.hpp"

namespace featprobe::metrics {

namespace fs = std::filesystem;

namespace {

constexpr const char* kStackFormat = "featprobe-perceptual-stack";

void check_layer(const PerceptualLayer& layer) {
  if (layer.features.rank() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "perceptual layer must be [C,H,W], got " +
                                               shape_to_string(layer.features.shape()));
  }
  if (!(layer.weight >= 0.0) || !std::isfinite(layer.weight)) {
    throw Error(ErrorCode::kInvalidParameter, "perceptual layer weights must be finite and >= 0");
  }
}

}  // namespace

double lpips_distance(const PerceptualStack& a, const PerceptualStack& b) {
  if (a.layers.size() != b.layers.size()) {
    throw Error(ErrorCode::kShapeMismatch, "perceptual stacks have different layer counts");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    const auto& la = a.layers[l];
    const auto& lb = b.layers[l];
    check_layer(la);
    check_layer(lb);
    if (la.features.shape() != lb.features.shape() || la.weight != lb.weight) {
      throw Error(ErrorCode::kShapeMismatch, "perceptual layer " + std::to_string(l) + " mismatch");
    }
    const std::size_t C = la.features.dim(0), P = la.features.dim(1) * la.features.dim(2);
    double acc = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      double na = 1.0, nb = 1.0;
      if (!a.normalized || !b.normalized) {
        double sa = 0.0, sb = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          sa += double(la.features[c * P + p]) * la.features[c * P + p];
          sb += double(lb.features[c * P + p]) * lb.features[c * P + p];
        }
        if (!a.normalized) na = std::max(std::sqrt(sa), nn::kCosineEps);
        if (!b.normalized) nb = std::max(std::sqrt(sb), nn::kCosineEps);
      }
      double sq = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double d = la.features[c * P + p] / na - lb.features[c * P + p] / nb;
        sq += d * d;
      }
      acc += sq;
    }
    total += la.weight * acc / static_cast<double>(P);
  }
  return total;
}

PerceptualStack load_perceptual_stack(const fs::path& dir) {
  const nlohmann::json meta = io::read_json(dir / "stack.json");
  if (!meta.is_object() || meta.value("format", "") != kStackFormat) {
    throw Error(ErrorCode::kSchema, "not a perceptual stack: " + dir.string(), "/format");
  }
  PerceptualStack stack;
  try {
    stack.normalized = meta.at("normalized").get<bool>();
    const auto& layers = meta.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      PerceptualLayer layer;
      layer.features = io::load_tensor(dir / layers[i].at("file").get<std::string>());
      layer.weight = layers[i].at("weight").get<double>();
      check_layer(layer);
      stack.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad perceptual stack: ") + e.what(), "/layers");
  }
  return stack;
}

void save_perceptual_stack(const PerceptualStack& stack, const fs::path& dir) {
  io::write_directory_atomic(dir, [&](const fs::path& tmp) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < stack.layers.size(); ++i) {
      const std::string file = "layer" + std::to_string(i) + ".npy";
      io::save_tensor(stack.layers[i].features, tmp / file);
      layers.push_back({{"file", file}, {"weight", stack.layers[i].weight}});
    }
    io::write_json_atomic(tmp / "stack.json",
                          {{"format", kStackFormat}, {"normalized", stack.normalized}, {"layers", layers}});
  });
}

}  // namespace featprobe::metrics
