#pragma once

#include <optional>
#include <string>
#include <vector>

#include "featprobe/io/manifest.hpp"
#include "featprobe/mapping/model.hpp"
#include "featprobe/nn/loss.hpp"
#include "featprobe/nn/train_config.hpp"

namespace featprobe::mapping {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double train_mse = 0.0;
  double train_cosloss = 0.0;
};

// Original/target feature maps in matching order.
struct PairSet {
  std::vector<FeatureMap> originals;
  std::vector<FeatureMap> targets;

  std::size_t size() const { return originals.size(); }
  bool empty() const { return originals.empty(); }
};

// Loads one manifest split. Shapes must agree across all pairs.
PairSet load_pairs(const io::PairManifest& manifest, io::Split split);

// Minibatch AdamW on mapping_loss. Each epoch reshuffles the training pairs
// with a generator seeded from (cfg.seed, epoch); the last partial batch is
// kept. Dropout draws come from a tape seeded per (cfg.seed, epoch, batch).
// Validation loss is computed in eval mode after every epoch.
// Throws kEmptySplit for an empty training set.
std::vector<EpochRecord> train_mapping(MappingModel& model, const PairSet& train,
                                       const PairSet& val, const nn::TrainConfig& cfg);

// Eval-mode loss over a pair set in network space, averaged per sample.
nn::LossParts evaluate_loss(const MappingModel& model, const PairSet& pairs,
                            const nn::TrainConfig& cfg);

// CSV with header epoch,train_loss,val_loss,train_mse,train_cosloss. A missing
// validation loss is an empty field.
std::string history_csv(const std::vector<EpochRecord>& history);
nlohmann::json history_json(const std::vector<EpochRecord>& history);

}  // namespace featprobe::mapping
