#include "featprobe/nn/train_config.hpp"

#include <cmath>

namespace featprobe::nn {

void TrainConfig::validate() const {
  if (!(lambda_mse >= 0.0) || !(lambda_cos >= 0.0) || !(lambda_mse + lambda_cos > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter,
                "loss weights must be non-negative with a positive sum");
  }
  if (epochs <= 0 || batch_size <= 0) {
    throw Error(ErrorCode::kInvalidParameter, "epochs and batch_size must be positive");
  }
  if (!(learning_rate > 0.0) || !(weight_decay >= 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "learning_rate must be > 0 and weight_decay >= 0");
  }
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"lambda_mse", cfg.lambda_mse},       {"lambda_cos", cfg.lambda_cos},
          {"learning_rate", cfg.learning_rate}, {"weight_decay", cfg.weight_decay},
          {"epochs", cfg.epochs},               {"batch_size", cfg.batch_size},
          {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& pointer) {
  if (!j.is_object()) throw Error(ErrorCode::kSchema, "train config must be an object", pointer);
  TrainConfig cfg;
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) {
      throw Error(ErrorCode::kSchema, std::string(key) + " must be a number", pointer + "/" + key);
    }
    out = j[key].get<double>();
  };
  auto integer = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) {
      throw Error(ErrorCode::kSchema, std::string(key) + " must be an integer", pointer + "/" + key);
    }
    out = j[key].get<std::remove_reference_t<decltype(out)>>();
  };
  for (const auto& [key, _] : j.items()) {
    static const char* known[] = {"lambda_mse", "lambda_cos", "learning_rate", "weight_decay",
                                  "epochs",     "batch_size", "seed"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error(ErrorCode::kSchema, "unknown key '" + key + "'", pointer + "/" + key);
  }
  number("lambda_mse", cfg.lambda_mse);
  number("lambda_cos", cfg.lambda_cos);
  number("learning_rate", cfg.learning_rate);
  number("weight_decay", cfg.weight_decay);
  integer("epochs", cfg.epochs);
  integer("batch_size", cfg.batch_size);
  integer("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

}  // namespace featprobe::nn
