#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "featprobe/image/ops.hpp"
#include "featprobe/mapping/permutation.hpp"
#include "featprobe/synthetic/featurizer.hpp"
#include "support.hpp"

using namespace featprobe;
using namespace featprobe::synthetic;
using testing::TempDir;

TEST_CASE("a black image through a bias-free featurizer is all zeros") {
  const auto f = ToyFeaturizer::create(FeaturizerKind::kPointwiseLinear, 8, 1, 1, false);
  const FeatureMap m = featurize(f, image::Image(6, 4));
  CHECK(m.tensor.shape() == Shape{8, 4, 6});
  for (float v : m.tensor.vec()) CHECK(v == 0.0f);
  CHECK(m.backbone == "toy");
}

TEST_CASE("pointwise featurizers commute with spatial ops bitwise") {
  const auto f = ToyFeaturizer::create(FeaturizerKind::kPointwiseLinear, 16, 2);
  const image::Image img = testing::random_image(7, 5, 3);
  const FeatureMap base = featurize(f, img);
  for (SpatialOp op : {SpatialOp::kRot90, SpatialOp::kRot180, SpatialOp::kRot270, SpatialOp::kMirrorH,
                       SpatialOp::kMirrorV}) {
    const FeatureMap moved = featurize(f, image::apply_spatial(img, op));
    CHECK(moved.tensor == mapping::permute_tensor(base.tensor, {op, {5, 7}}));
  }
}

TEST_CASE("patch pooling averages p x p blocks before the projection") {
  const auto f = ToyFeaturizer::create(FeaturizerKind::kPatchPoolLinear, 4, 5, 4);
  const image::Image img = testing::random_image(8, 12, 6);
  const FeatureMap m = featurize(f, img);
  REQUIRE(m.tensor.shape() == Shape{4, 3, 2});
  for (std::size_t c = 0; c < 4; ++c) {
    double mean[3] = {0, 0, 0};
    for (std::size_t y = 4; y < 8; ++y) {
      for (std::size_t x = 4; x < 8; ++x) {
        for (int k = 0; k < 3; ++k) mean[k] += img.at(x, y)[k] / 255.0 / 16.0;
      }
    }
    double expected = f.bias[c];
    for (int k = 0; k < 3; ++k) expected += f.weight[c * 3 + k] * mean[k];
    CHECK(m.tensor.at(c, 1, 1) == doctest::Approx(expected).epsilon(1e-6));
  }
  CHECK_THROWS_CODE(featurize(f, testing::random_image(10, 12, 7)), ErrorCode::kShapeMismatch);
}

TEST_CASE("grayscale acts on pointwise features as an explicit affine map") {
  const std::size_t C = 12;
  const auto f = ToyFeaturizer::create(FeaturizerKind::kPointwiseLinear, C, 8);
  const image::Image img = testing::random_image(9, 9, 9);
  const FeatureMap orig = featurize(f, img);
  const FeatureMap gray = featurize(f, image::grayscale(img));

  // x = W^+ (f - b), so grayscale features are A f + c with
  // A = W 1 l^T W^+ and c = b - A b.
  Eigen::MatrixXd W(C, 3);
  Eigen::VectorXd b(C);
  for (std::size_t i = 0; i < C; ++i) {
    for (int k = 0; k < 3; ++k) W(i, k) = f.weight[i * 3 + k];
    b(i) = f.bias[i];
  }
  const Eigen::RowVector3d luma(0.299, 0.587, 0.114);
  const Eigen::MatrixXd pinv = W.completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd A = W * Eigen::Vector3d::Ones() * luma * pinv;
  const Eigen::VectorXd c = b - A * b;

  // Luma is rounded to 8 bits, so each feature may move by at most
  // |sum_k W_ik| * 0.5 / 255 on top of float rounding.
  for (std::size_t l = 0; l < 81; ++l) {
    Eigen::VectorXd x(C);
    for (std::size_t i = 0; i < C; ++i) x(i) = orig.tensor[i * 81 + l];
    const Eigen::VectorXd predicted = A * x + c;
    for (std::size_t i = 0; i < C; ++i) {
      const double tol = std::abs(W.row(i).sum()) * 0.5 / 255.0 + 1e-5;
      CHECK(std::abs(gray.tensor[i * 81 + l] - predicted(i)) <= tol);
    }
  }
}

TEST_CASE("featurizers are deterministic and round trip through bundles") {
  const auto a = ToyFeaturizer::create(FeaturizerKind::kPatchPoolLinear, 6, 11, 2);
  const auto b = ToyFeaturizer::create(FeaturizerKind::kPatchPoolLinear, 6, 11, 2);
  CHECK(a.weight == b.weight);
  CHECK(a.bias == b.bias);
  CHECK_FALSE(a.weight == ToyFeaturizer::create(FeaturizerKind::kPatchPoolLinear, 6, 12, 2).weight);
  const image::Image img = testing::random_image(8, 8, 12);
  CHECK(featurize(a, img).tensor == featurize(b, img).tensor);

  TempDir dir;
  save_featurizer(a, dir / "feat");
  const ToyFeaturizer back = load_featurizer(dir / "feat");
  CHECK(back.kind == a.kind);
  CHECK(back.pool == 2);
  CHECK(featurize(back, img).tensor == featurize(a, img).tensor);
  CHECK(parse_featurizer_kind("pointwise_linear") == FeaturizerKind::kPointwiseLinear);
  CHECK_THROWS_AS(parse_featurizer_kind("resnet"), Error);
}
