#include <doctest.h>

#include <cmath>

#include "featprobe/nn/adamw.hpp"
#include "featprobe/nn/loss.hpp"
#include "featprobe/nn/train_config.hpp"
#include "support.hpp"

using namespace featprobe;
using namespace featprobe::nn;

namespace {

double loss_of(std::vector<float> pred, std::vector<float> target, Shape shape = {1, 2, 1, 1}) {
  Tape<float> tape(Mode::kTrain);
  auto p = make_parameter<float>("p", Tensor(shape, std::move(pred)));
  auto loss = mapping_loss(tape, p.var, Tensor(shape, std::move(target)), 0.3, 0.7);
  return loss->value[0];
}

}  // namespace

TEST_CASE("hand-computed mapping loss values") {
  CHECK(loss_of({1, 0}, {1, 0}) == 0.0f);
  CHECK(loss_of({0, 1}, {1, 0}) == 1.0f);
  CHECK(loss_of({-1, 0}, {1, 0}) == 2.0f);

  const Tensor t = testing::random_tensor({2, 4, 3, 3}, 1);
  Tape<float> tape(Mode::kTrain);
  auto p = make_parameter<float>("p", t);
  CHECK(mapping_loss(tape, p.var, t, 0.3, 0.7)->value[0] == doctest::Approx(0.0).scale(1).epsilon(1e-6));

  const LossParts parts = mapping_loss_value(Tensor(Shape{1, 2, 1, 1}, std::vector<float>{0, 1}),
                                             Tensor(Shape{1, 2, 1, 1}, std::vector<float>{1, 0}), 0.3, 0.7);
  CHECK(parts.mse == 1.0);
  CHECK(parts.cos_loss == 1.0);
  CHECK(parts.total == doctest::Approx(1.0));
}

TEST_CASE("loss is non-negative and finite for zero vectors") {
  CHECK(loss_of({0, 0}, {1, 0}) >= 0.0);
  CHECK(std::isfinite(loss_of({0, 0}, {0, 0})));
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Tensor a = testing::random_tensor({2, 3, 2, 2}, s);
    const Tensor b = testing::random_tensor({2, 3, 2, 2}, s + 100);
    CHECK(mapping_loss_value(a, b, 0.3, 0.7).total >= 0.0);
  }
}

TEST_CASE("the median takes the mean of the two middle cosines") {
  // Four locations with cosines 1, 0, -1, 1 against target (1,0): sorted
  // -1, 0, 1, 1 so the median is 0.5 and the cosine term is 0.5.
  const Tensor pred(Shape{1, 2, 1, 4}, std::vector<float>{1, 0, -1, 1, 0, 1, 0, 0});
  const Tensor target(Shape{1, 2, 1, 4}, std::vector<float>{1, 1, 1, 1, 0, 0, 0, 0});
  const LossParts parts = mapping_loss_value(pred, target, 0.0, 1.0);
  CHECK(parts.cos_loss == doctest::Approx(0.5));
}

TEST_CASE("MSE-only loss at pred == target has zero gradient") {
  const Tensor t = testing::random_tensor({1, 3, 2, 2}, 2);
  Tape<float> tape(Mode::kTrain);
  auto p = make_parameter<float>("p", t);
  tape.backward(mapping_loss(tape, p.var, t, 1.0, 0.0));
  for (float g : p.grad().vec()) CHECK(g == 0.0f);
}

TEST_CASE("mapping loss gradient matches central differences in float64") {
  std::vector<Parameter<double>> ps = {
      make_parameter<double>("p", testing::random_tensor64({2, 3, 3, 3}, 3))};
  const Tensor64 target = testing::random_tensor64({2, 3, 3, 3}, 4);
  // 9 locations per sample: odd count, so the median is a single element.
  ps[0].grad();
  Tape<double> tape(Mode::kTrain);
  tape.backward(mapping_loss(tape, ps[0].var, target, 0.3, 0.7));
  const Tensor64 analytic = ps[0].grad();
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double saved = ps[0].value()[i];
    ps[0].value()[i] = saved + 1e-6;
    const double up = mapping_loss_value(ps[0].value(), target, 0.3, 0.7).total;
    ps[0].value()[i] = saved - 1e-6;
    const double down = mapping_loss_value(ps[0].value(), target, 0.3, 0.7).total;
    ps[0].value()[i] = saved;
    const double numeric = (up - down) / 2e-6;
    worst = std::max(worst, std::abs(numeric - analytic[i]) / std::max(1e-6, std::abs(numeric)));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("AdamW closed forms") {
  SUBCASE("zero gradient without decay leaves parameters unchanged") {
    std::vector<Parameter<float>> ps = {make_parameter<float>("w", testing::random_tensor({5}, 5))};
    const Tensor before = ps[0].value();
    AdamWOptions opt;
    opt.weight_decay = 0.0;
    AdamW<float> adam(ps, opt);
    zero_grad(ps);
    adam.step(ps);
    CHECK(ps[0].value() == before);
  }
  SUBCASE("zero gradient with decay scales by 1 - lr*wd") {
    std::vector<Parameter<double>> ps = {make_parameter<double>("w", testing::random_tensor64({5}, 6))};
    const Tensor64 before = ps[0].value();
    AdamW<double> adam(ps, AdamWOptions{});
    zero_grad(ps);
    adam.step(ps);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(ps[0].value()[i] == doctest::Approx(before[i] * (1.0 - 1e-5)).epsilon(1e-14));
    }
  }
  SUBCASE("first step with unit gradient moves by about -lr") {
    std::vector<Parameter<double>> ps = {make_parameter<double>("w", Tensor64(Shape{1}, 0.0))};
    AdamWOptions opt;
    opt.weight_decay = 0.0;
    AdamW<double> adam(ps, opt);
    ps[0].grad()[0] = 1.0;
    adam.step(ps);
    CHECK(std::abs(ps[0].value()[0] - (-1e-3)) <= 1e-6);
    CHECK(ps[0].value()[0] == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
  }
}

TEST_CASE("train config validation and JSON") {
  TrainConfig cfg;
  CHECK(cfg.lambda_mse == 0.3);
  CHECK(cfg.lambda_cos == 0.7);
  CHECK_NOTHROW(cfg.validate());
  cfg.lambda_mse = 0.0;
  cfg.lambda_cos = 0.0;
  CHECK_THROWS_CODE(cfg.validate(), ErrorCode::kInvalidParameter);
  cfg.lambda_mse = -0.1;
  cfg.lambda_cos = 1.0;
  CHECK_THROWS_CODE(cfg.validate(), ErrorCode::kInvalidParameter);

  TrainConfig a;
  a.epochs = 7;
  a.seed = 99;
  const TrainConfig b = train_config_from_json(to_json(a));
  CHECK(b.epochs == 7);
  CHECK(b.seed == 99);
  CHECK_THROWS_CODE(train_config_from_json(nlohmann::json{{"epochs", "many"}}), ErrorCode::kSchema);
  CHECK_THROWS_CODE(train_config_from_json(nlohmann::json{{"epoch", 3}}), ErrorCode::kSchema);
}
