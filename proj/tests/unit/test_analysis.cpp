#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "featprobe/analysis/bias.hpp"
#include "featprobe/analysis/report.hpp"
#include "featprobe/analysis/svd.hpp"
#include "support.hpp"

using namespace featprobe;
using namespace featprobe::analysis;

namespace {

Tensor64 diag(std::vector<double> d) {
  const std::size_t n = d.size();
  Tensor64 t(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = d[i];
  return t;
}

Tensor64 random_orthogonal(std::size_t n, std::uint64_t seed) {
  const Tensor64 a = testing::random_tensor64({n, n}, seed);
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = a[i * n + j];
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  Tensor64 out(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = q(i, j);
  }
  return out;
}

FeatureMap single_location(std::vector<float> v) {
  const std::size_t c = v.size();
  return FeatureMap::from_tensor(Tensor(Shape{c, 1, 1}, std::move(v)));
}

}  // namespace

TEST_CASE("svd of the identity") {
  const SvdReport r = svd_analyze(diag({1, 1, 1, 1}));
  CHECK(r.singular_values == std::vector<double>{1, 1, 1, 1});
  CHECK(r.spectral_entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(r.effective_rank == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r.reconstruction_error <= 1e-12);
}

TEST_CASE("svd of a rank-one matrix") {
  const Tensor64 u = testing::random_tensor64({5}, 1), v = testing::random_tensor64({5}, 2);
  Tensor64 w(Shape{5, 5});
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) w[i * 5 + j] = u[i] * v[j];
  }
  const SvdReport r = svd_analyze(w);
  CHECK(r.spectral_entropy == doctest::Approx(0.0).scale(1).epsilon(1e-9));
  CHECK(r.effective_rank == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("svd of diag(3,1)") {
  const SvdReport r = svd_analyze(diag({3, 1}));
  CHECK(r.singular_values[0] == doctest::Approx(3.0));
  CHECK(r.singular_values[1] == doctest::Approx(1.0));
  CHECK(r.energy[0] == doctest::Approx(0.75));
  CHECK(r.energy[1] == doctest::Approx(0.25));
  CHECK(r.spectral_entropy == doctest::Approx(-0.75 * std::log(0.75) - 0.25 * std::log(0.25)).epsilon(1e-12));
  CHECK(r.spectral_entropy == doctest::Approx(0.5623).epsilon(1e-4));
}

TEST_CASE("svd invariants on random matrices") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const std::size_t n = 16 + s * 7;
    const Tensor64 w = testing::random_tensor64({n, n}, s);
    const SvdReport r = svd_analyze(w);
    CHECK(r.reconstruction_error <= 1e-5);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(r.singular_values[i] >= 0.0);
      if (i > 0) CHECK(r.singular_values[i] <= r.singular_values[i - 1]);
      sum += r.energy[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    CHECK(r.spectral_entropy >= 0.0);
    CHECK(r.spectral_entropy <= std::log(double(n)) + 1e-12);

    Tensor64 scaled = w;
    for (auto& v : scaled.data()) v *= 7.5;
    CHECK(std::abs(svd_analyze(scaled).spectral_entropy - r.spectral_entropy) <= 1e-9);

    const SvdReport q = svd_analyze(random_orthogonal(n, s + 100));
    for (double sv : q.singular_values) CHECK(std::abs(sv - 1.0) <= 1e-6);
    CHECK(std::abs(q.spectral_entropy - std::log(double(n))) <= 1e-9);
  }
}

TEST_CASE("svd errors") {
  CHECK_THROWS_CODE(svd_analyze(Tensor64(Shape{2, 3})), ErrorCode::kShapeMismatch);
  Tensor64 bad = diag({1, 1});
  bad[1] = std::nan("");
  CHECK_THROWS_CODE(svd_analyze(bad), ErrorCode::kNonFinite);
  CHECK(spectral_entropy({0, 0, 0}) == 0.0);
}

TEST_CASE("bias analysis closed forms") {
  const Tensor eye(Shape{2, 2}, std::vector<float>{1, 0, 0, 1});
  std::vector<FeatureMap> samples = {FeatureMap::from_tensor(testing::random_tensor({2, 3, 3}, 1))};
  const BiasReport zero_bias = bias_analyze(eye, Tensor(Shape{2}), samples);
  CHECK(zero_bias.input_dominance_ratio == 1.0);
  CHECK(zero_bias.directional_mdncs == doctest::Approx(1.0));
  CHECK(zero_bias.bias_norm == 0.0);
  CHECK(zero_bias.locations == 9);

  const BiasReport r = bias_analyze(eye, Tensor(Shape{2}, std::vector<float>{0, 1}), {single_location({99, 0})});
  CHECK(r.input_dominance_ratio == doctest::Approx(0.99));
  CHECK(r.bias_norm == doctest::Approx(1.0));
  CHECK(r.directional_mdncs == doctest::Approx(99.0 / std::sqrt(99.0 * 99.0 + 1.0)));

  const BiasReport dead = bias_analyze(Tensor(Shape{2, 2}), Tensor(Shape{2}, 1.0f), samples);
  CHECK(dead.input_dominance_ratio == 0.0);
  CHECK(dead.skipped_count == 9);
  CHECK(dead.directional_mdncs == 0.0);

  CHECK_THROWS_CODE(bias_analyze(eye, Tensor(Shape{2}), {}), ErrorCode::kEmptySplit);
  CHECK_THROWS_CODE(bias_analyze(eye, Tensor(Shape{3}), samples), ErrorCode::kShapeMismatch);
}

TEST_CASE("the dominance ratio grows with the weight scale") {
  const Tensor w = testing::random_tensor({4, 4}, 2);
  const Tensor b = testing::random_tensor({4}, 3);
  std::vector<FeatureMap> samples = {FeatureMap::from_tensor(testing::random_tensor({4, 3, 3}, 4))};
  double previous = bias_analyze(w, b, samples).input_dominance_ratio;
  for (float c : {2.0f, 4.0f, 8.0f}) {
    Tensor scaled = w;
    for (auto& v : scaled.data()) v *= c;
    const double ratio = bias_analyze(scaled, b, samples).input_dominance_ratio;
    CHECK(ratio > previous);
    CHECK(ratio <= 1.0);
    previous = ratio;
  }
}

TEST_CASE("spectrum tables") {
  const SvdReport flat = svd_analyze(diag({1, 1, 1}));
  const SpectrumTable one = spectrum_curves({{"identity", flat}});
  REQUIRE(one.rows.size() == 3);
  for (const auto& row : one.rows) CHECK(*row[0] == doctest::Approx(1.0 / 3.0));

  const SpectrumTable two = spectrum_curves({{"a", svd_analyze(diag({3, 1}))}, {"b", svd_analyze(diag({1, 1}))}});
  CHECK(two.labels == std::vector<std::string>{"a", "b"});
  REQUIRE(two.rows.size() == 2);
  CHECK(*two.rows[0][0] == doctest::Approx(0.75));
  CHECK(*two.rows[1][0] == doctest::Approx(0.25));
  const std::string csv = to_csv(two);
  CHECK(csv.rfind("rank,a,b\n1,", 0) == 0);
  CHECK(to_json(two).dump().find("\"b\"") != std::string::npos);

  const SpectrumTable ragged = spectrum_curves({{"big", flat}, {"small", svd_analyze(diag({3, 1}))}});
  CHECK_FALSE(ragged.rows[2][1].has_value());
  CHECK_THROWS_CODE(spectrum_curves({}), ErrorCode::kInvalidParameter);
}

TEST_CASE("analysis records") {
  const SvdReport r = svd_analyze(testing::random_tensor64({80, 80}, 5));
  const auto j = analysis_json({"m", "feat3", "grayscale"}, r, std::nullopt);
  CHECK(j.at("singular_values").size() == 64);
  CHECK(j.at("entropy_convention") == kEntropyConvention);
  CHECK(j.at("input_dominance_ratio").is_null());
  CHECK(analysis_json({"m", "feat3", "grayscale"}, r, std::nullopt, 0).at("singular_values").size() == 80);
}
