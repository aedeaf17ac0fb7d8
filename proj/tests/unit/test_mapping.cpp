#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "featprobe/image/ops.hpp"
#include "featprobe/mapping/model.hpp"
#include "featprobe/mapping/normalization.hpp"
#include "featprobe/mapping/permutation.hpp"
#include "featprobe/nn/gradcheck.hpp"
#include "featprobe/nn/loss.hpp"
#include "support.hpp"

using namespace featprobe;
using namespace featprobe::mapping;
using testing::TempDir;

namespace {

constexpr SpatialOp kOps[] = {SpatialOp::kRot90, SpatialOp::kRot180, SpatialOp::kRot270,
                              SpatialOp::kMirrorH, SpatialOp::kMirrorV};

FeatureMap random_map(Shape shape, std::uint64_t seed) {
  return FeatureMap::from_tensor(testing::random_tensor(std::move(shape), seed));
}

ArchConfig small(Family family) {
  ArchConfig a;
  a.family = family;
  a.hidden = 16;
  a.heads = 2;
  a.layers = 1;
  a.ffn = 24;
  a.init_seed = 3;
  return a;
}

MappingModel identity_linear(const FeatureMap& sample, std::optional<SpatialOp> perm = std::nullopt) {
  ModelSpec spec;
  spec.arch.identity_init = true;
  spec.pre_permutation = perm;
  spec.normalize_io = false;
  return build_model(spec, sample);
}

std::vector<std::vector<float>> location_vectors(const Tensor& t) {
  const std::size_t c = t.dim(0), hw = t.dim(1) * t.dim(2);
  std::vector<std::vector<float>> out(hw, std::vector<float>(c));
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t l = 0; l < hw; ++l) out[l][k] = t[k * hw + l];
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("rot90 reorders a 2x2 map clockwise") {
  const Tensor t(Shape{1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  CHECK(permute_tensor(t, {SpatialOp::kRot90, {2, 2}}).vec() == std::vector<float>{3, 1, 4, 2});
}

TEST_CASE("feature reordering has the same handedness as image ops") {
  // A one-channel map whose values are pixel ids, next to an image whose
  // pixels carry the same ids.
  const std::size_t w = 5, h = 3;
  image::Image img(w, h);
  Tensor t(Shape{1, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto id = static_cast<std::uint8_t>(y * w + x);
      img.at(x, y) = {id, 0, 0};
      t[y * w + x] = id;
    }
  }
  for (SpatialOp op : kOps) {
    const image::Image moved = image::apply_spatial(img, op);
    const Tensor p = permute_tensor(t, {op, {h, w}});
    REQUIRE(p.dim(1) == moved.height());
    REQUIRE(p.dim(2) == moved.width());
    for (std::size_t y = 0; y < moved.height(); ++y) {
      for (std::size_t x = 0; x < moved.width(); ++x) {
        CHECK(p[y * moved.width() + x] == moved.at(x, y)[0]);
      }
    }
  }
}

TEST_CASE("permutations move vectors without changing them") {
  const FeatureMap f = random_map({4, 3, 5}, 1);
  for (SpatialOp op : kOps) {
    const FeatureMap p = permute_features(f, {op, {3, 5}});
    CHECK(location_vectors(p.tensor) == location_vectors(f.tensor));
  }
  const SpatialPermutation mh{SpatialOp::kMirrorH, {3, 5}};
  CHECK(permute_tensor(permute_tensor(f.tensor, mh), mh) == f.tensor);
  CHECK_THROWS_CODE(permute_features(f, {SpatialOp::kRot90, {5, 3}}), ErrorCode::kShapeMismatch);
}

TEST_CASE("location normalization") {
  FeatureMap ones = FeatureMap::from_tensor(Tensor(Shape{4, 1, 1}, 1.0f));
  const NormalizedMap n = normalize_locations(ones);
  CHECK(n.map.tensor.vec() == std::vector<float>{0.5f, 0.5f, 0.5f, 0.5f});
  CHECK(n.map.normalized);
  CHECK((*n.map.norms)[0] == 2.0f);

  const FeatureMap f = random_map({8, 4, 4}, 2);
  const FeatureMap back = denormalize_locations(normalize_locations(f).map);
  for (std::size_t i = 0; i < f.tensor.size(); ++i) CHECK(std::abs(back.tensor[i] - f.tensor[i]) <= 1e-5);

  FeatureMap unit = normalize_locations(f).map;
  unit.normalized = false;
  unit.norms.reset();
  const FeatureMap again = normalize_locations(unit).map;
  for (std::size_t i = 0; i < f.tensor.size(); ++i) CHECK(std::abs(again.tensor[i] - unit.tensor[i]) <= 1e-6);

  FeatureMap with_zero = FeatureMap::from_tensor(Tensor(Shape{2, 1, 2}, std::vector<float>{0, 3, 0, 4}));
  const NormalizedMap z = normalize_locations(with_zero);
  CHECK(z.zero_norm_locations == 1);
  CHECK(z.map.tensor[0] == 0.0f);
  CHECK(z.map.tensor[1] == doctest::Approx(0.6));
  CHECK(z.map.tensor.all_finite());

  CHECK_THROWS_CODE(denormalize_locations(f), ErrorCode::kInvalidParameter);
}

TEST_CASE("identity linear models") {
  const FeatureMap f = random_map({6, 4, 3}, 3);
  const MappingModel plain = identity_linear(f);
  CHECK(map_features(plain, f).tensor == f.tensor);

  const MappingModel mirrored = identity_linear(f, SpatialOp::kMirrorV);
  CHECK(map_features(mirrored, f).tensor == permute_tensor(f.tensor, {SpatialOp::kMirrorV, {4, 3}}));

  for (SpatialOp op : kOps) {
    const MappingModel m = identity_linear(f, op);
    CHECK(map_features(m, f).tensor == permute_tensor(f.tensor, {op, {4, 3}}));
  }

  ModelSpec spec;
  spec.arch.identity_init = true;
  spec.normalize_io = true;
  const MappingModel normed = build_model(spec, f);
  const Tensor out = map_features(normed, f).tensor;
  for (std::size_t i = 0; i < f.tensor.size(); ++i) CHECK(out[i] == doctest::Approx(f.tensor[i]).epsilon(1e-5));
}

TEST_CASE("every family maps shape to shape and is deterministic in eval mode") {
  const FeatureMap f = random_map({5, 4, 4}, 4);
  for (Family fam : {Family::kLinear, Family::kMlp, Family::kCnn, Family::kTransformer}) {
    ModelSpec spec;
    spec.arch = small(fam);
    spec.normalize_io = false;
    const MappingModel m = build_model(spec, f);
    const FeatureMap a = map_features(m, f);
    CHECK(a.tensor.shape() == f.tensor.shape());
    CHECK(map_features(m, f).tensor == a.tensor);
    CHECK(a.tensor.all_finite());
  }
}

TEST_CASE("linear and mlp families are location-equivariant") {
  const FeatureMap f = random_map({5, 4, 4}, 5);
  for (Family fam : {Family::kLinear, Family::kMlp}) {
    ModelSpec spec;
    spec.arch = small(fam);
    spec.normalize_io = false;
    const MappingModel m = build_model(spec, f);
    const SpatialPermutation rot{SpatialOp::kRot90, {4, 4}};
    const FeatureMap moved = FeatureMap::from_tensor(permute_tensor(f.tensor, rot));
    const Tensor a = permute_tensor(map_features(m, f).tensor, rot);
    const Tensor b = map_features(m, moved).tensor;
    CHECK(a == b);
  }
}

TEST_CASE("cnn receptive field is 5x5") {
  FeatureMap f = random_map({3, 9, 9}, 6);
  ModelSpec spec;
  spec.arch = small(Family::kCnn);
  spec.normalize_io = false;
  const MappingModel m = build_model(spec, f);
  const Tensor before = map_features(m, f).tensor;
  f.tensor.at(1, 4, 4) += 5.0f;
  const Tensor after = map_features(m, f).tensor;
  bool changed_edge = false;
  for (std::size_t h = 0; h < 9; ++h) {
    for (std::size_t w = 0; w < 9; ++w) {
      const long dist = std::max(std::abs(static_cast<long>(h) - 4), std::abs(static_cast<long>(w) - 4));
      bool same = true;
      for (std::size_t c = 0; c < 3; ++c) same = same && before.at(c, h, w) == after.at(c, h, w);
      if (dist > 2) CHECK(same);
      if (dist == 2 && !same) changed_edge = true;
    }
  }
  CHECK(changed_edge);
}

TEST_CASE("mapping networks pass float64 gradient checks") {
  const Tensor64 x = testing::random_tensor64({2, 3, 3, 3}, 7);
  const Tensor64 target = testing::random_tensor64({2, 3, 3, 3}, 8);
  for (Family fam : {Family::kLinear, Family::kMlp, Family::kCnn, Family::kTransformer}) {
    ArchConfig a = small(fam);
    a.channels = 3;
    a.grid_h = 3;
    a.grid_w = 3;
    a.hidden = 8;
    a.ffn = 8;
    MappingNet<double> net = MappingNet<float>(a).cast<double>();
    auto report = nn::check_gradients<double>(
        net.parameters(),
        [&](nn::Tape<double>& t) {
          return nn::mapping_loss(t, net.forward(t, t.constant(x)), target, 0.3, 0.7);
        },
        1e-5, nn::Mode::kTrain, 11);
    CHECK_MESSAGE(report.max_relative_error <= 1e-4, family_name(fam), " ", report.worst_parameter);
  }
}

TEST_CASE("architecture validation") {
  ArchConfig a = small(Family::kTransformer);
  a.channels = 4;
  a.heads = 3;
  a.grid_h = a.grid_w = 2;
  CHECK_THROWS_CODE(a.validate(), ErrorCode::kInvalidParameter);
  ArchConfig b = small(Family::kMlp);
  b.channels = 4;
  b.identity_init = true;
  CHECK_THROWS_CODE(b.validate(), ErrorCode::kInvalidParameter);
  CHECK(small(Family::kMlp).effective_dropout() == 0.2);
  CHECK(small(Family::kCnn).effective_dropout() == 0.2);
  CHECK(small(Family::kTransformer).effective_dropout() == 0.1);
  CHECK(parse_family("cnn") == Family::kCnn);
  CHECK_THROWS_AS(parse_family("rnn"), Error);
}

TEST_CASE("stage normalization policy") {
  CHECK(default_normalize_io("convnext", Stage::kFeat0));
  CHECK(default_normalize_io("convnext", Stage::kFeat2));
  CHECK_FALSE(default_normalize_io("convnext", Stage::kFeat3));
  CHECK_FALSE(default_normalize_io("swinv2", Stage::kSwinLast));
}

TEST_CASE("bundles round trip for every family") {
  TempDir dir;
  const FeatureMap f = random_map({5, 4, 4}, 9);
  for (Family fam : {Family::kLinear, Family::kMlp, Family::kCnn, Family::kTransformer}) {
    ModelSpec spec;
    spec.arch = small(fam);
    spec.pre_permutation = SpatialOp::kRot270;
    const MappingModel m = build_model(spec, f);
    const auto path = dir / std::string(family_name(fam));
    save_model(m, path);
    const MappingModel back = load_model(path);
    CHECK(back.arch().family == fam);
    CHECK(back.pre_permutation == SpatialOp::kRot270);
    CHECK(map_features(back, f).tensor == map_features(m, f).tensor);
  }
  CHECK_THROWS_AS(load_model(dir / "missing"), Error);
}

TEST_CASE("weight accessors are only defined for the linear family") {
  const FeatureMap f = random_map({5, 2, 2}, 10);
  ModelSpec spec;
  spec.arch = small(Family::kMlp);
  CHECK_THROWS_CODE(build_model(spec, f).linear_weight(), ErrorCode::kInvalidParameter);
  CHECK(identity_linear(f).linear_weight().shape() == Shape{5, 5});
}
