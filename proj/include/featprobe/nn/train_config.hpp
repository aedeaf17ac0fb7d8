#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "featprobe/nn/adamw.hpp"
#include "featprobe/nn/graph.hpp"

namespace featprobe::nn {

struct TrainConfig {
  double lambda_mse = 0.3;
  double lambda_cos = 0.7;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  int epochs = 20;
  int batch_size = 16;
  std::uint64_t seed = 0;
  Mode mode = Mode::kTrain;

  // Throws kInvalidParameter unless both lambdas are >= 0 with a positive sum
  // and epochs/batch_size are positive.
  void validate() const;

  AdamWOptions optimizer() const {
    AdamWOptions o;
    o.learning_rate = learning_rate;
    o.weight_decay = weight_decay;
    return o;
  }
};

nlohmann::json to_json(const TrainConfig& cfg);
// Missing keys keep their defaults; `pointer` prefixes error locations.
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& pointer = "");

}  // namespace featprobe::nn
