#include "featprobe/synthetic/featurizer.hpp"

#include <array>

#include "featprobe/io/files.hpp"
#include "featprobe/io/npy.hpp"
#include "featprobe/rng.hpp"

namespace featprobe::synthetic {

namespace fs = std::filesystem;

namespace {
constexpr const char* kFeaturizerFormat = "featprobe-featurizer-bundle";
}  // namespace

std::string_view featurizer_kind_name(FeaturizerKind kind) noexcept {
  return kind == FeaturizerKind::kPointwiseLinear ? "pointwise_linear" : "patch_pool_linear";
}

FeaturizerKind parse_featurizer_kind(std::string_view name) {
  if (name == "pointwise_linear") return FeaturizerKind::kPointwiseLinear;
  if (name == "patch_pool_linear") return FeaturizerKind::kPatchPoolLinear;
  throw Error(ErrorCode::kInvalidParameter, "unknown featurizer kind '" + std::string(name) + "'");
}

ToyFeaturizer ToyFeaturizer::create(FeaturizerKind kind, std::size_t channels, std::uint64_t seed,
                                    std::size_t pool, bool with_bias) {
  if (channels == 0) throw Error(ErrorCode::kInvalidParameter, "featurizer needs channels > 0");
  if (kind == FeaturizerKind::kPointwiseLinear) pool = 1;
  if (pool == 0) throw Error(ErrorCode::kInvalidParameter, "pool size must be positive");
  ToyFeaturizer f;
  f.kind = kind;
  f.pool = pool;
  f.seed = seed;
  f.weight = Tensor(Shape{channels, 3});
  f.bias = Tensor(Shape{channels});
  Pcg32 wrng(seed, 0), brng(seed, 1);
  for (auto& v : f.weight.data()) v = static_cast<float>(wrng.normal());
  if (with_bias) {
    for (auto& v : f.bias.data()) v = static_cast<float>(0.1 * brng.normal());
  }
  return f;
}

FeatureMap featurize(const ToyFeaturizer& f, const image::Image& img) {
  const std::size_t p = f.pool;
  if (img.empty() || img.width() % p != 0 || img.height() % p != 0) {
    throw Error(ErrorCode::kShapeMismatch, "image " + std::to_string(img.width()) + "x" +
                                               std::to_string(img.height()) +
                                               " is not divisible by pool size " + std::to_string(p));
  }
  const std::size_t H = img.height() / p, W = img.width() / p, C = f.channels();
  Tensor out(Shape{C, H, W});
  const double area = static_cast<double>(p * p);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      std::array<double, 3> rgb{};
      for (std::size_t dy = 0; dy < p; ++dy) {
        for (std::size_t dx = 0; dx < p; ++dx) {
          const auto& px = img.at(c * p + dx, r * p + dy);
          for (int k = 0; k < 3; ++k) rgb[k] += px[k];
        }
      }
      for (auto& v : rgb) v /= 255.0 * area;
      for (std::size_t o = 0; o < C; ++o) {
        const double v = f.weight[o * 3] * rgb[0] + f.weight[o * 3 + 1] * rgb[1] +
                         f.weight[o * 3 + 2] * rgb[2] + f.bias[o];
        out.at(o, r, c) = static_cast<float>(v);
      }
    }
  }
  FeatureMap map;
  map.tensor = std::move(out);
  map.backbone = "toy";
  return map;
}

void save_featurizer(const ToyFeaturizer& f, const fs::path& dir) {
  io::write_directory_atomic(dir, [&](const fs::path& tmp) {
    io::save_tensor(f.weight, tmp / "weight.npy");
    io::save_tensor(f.bias, tmp / "bias.npy");
    io::write_json_atomic(tmp / "meta.json", {{"format", kFeaturizerFormat},
                                              {"kind", featurizer_kind_name(f.kind)},
                                              {"channels", f.channels()},
                                              {"pool", f.pool},
                                              {"seed", f.seed}});
  });
}

ToyFeaturizer load_featurizer(const fs::path& dir) {
  const nlohmann::json meta = io::read_json(dir / "meta.json");
  if (!meta.is_object() || meta.value("format", "") != kFeaturizerFormat) {
    throw Error(ErrorCode::kSchema, "not a featurizer bundle: " + dir.string(), "/format");
  }
  ToyFeaturizer f;
  try {
    f.kind = parse_featurizer_kind(meta.at("kind").get<std::string>());
    f.pool = meta.at("pool").get<std::size_t>();
    f.seed = meta.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad featurizer metadata: ") + e.what());
  }
  f.weight = io::load_tensor(dir / "weight.npy");
  f.bias = io::load_tensor(dir / "bias.npy");
  if (f.weight.rank() != 2 || f.weight.dim(1) != 3 || f.bias.shape() != Shape{f.weight.dim(0)} ||
      f.pool == 0) {
    throw Error(ErrorCode::kShapeMismatch, "featurizer bundle has inconsistent weight/bias shapes");
  }
  return f;
}

}  // namespace featprobe::synthetic
