#include "featprobe/mapping/train.hpp"

#include <cstdio>
#include <numeric>

#include "featprobe/io/npy.hpp"
#include "featprobe/nn/adamw.hpp"
#include "featprobe/nn/loss.hpp"
#include "featprobe/rng.hpp"

namespace featprobe::mapping {

namespace {

// Stacks prepared [C,H,W] tensors into [B,C,H,W].
Tensor stack(const std::vector<Tensor>& items, const std::vector<std::size_t>& order,
             std::size_t begin, std::size_t end) {
  const Shape& s = items[order[begin]].shape();
  const std::size_t n = items[order[begin]].size();
  Tensor out(Shape{end - begin, s[0], s[1], s[2]});
  for (std::size_t i = begin; i < end; ++i) {
    const auto& src = items[order[i]].vec();
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>((i - begin) * n));
  }
  return out;
}

struct Prepared {
  std::vector<Tensor> inputs, targets;
};

Prepared prepare(const MappingModel& model, const PairSet& pairs) {
  if (pairs.originals.size() != pairs.targets.size()) {
    throw Error(ErrorCode::kShapeMismatch, "pair set has unequal original/target counts");
  }
  Prepared out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.inputs.push_back(prepare_input(model, pairs.originals[i]).tensor);
    out.targets.push_back(prepare_target(model, pairs.targets[i]));
    if (out.inputs.back().shape() != out.inputs.front().shape() ||
        out.targets.back().shape() != out.inputs.front().shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "pair " + std::to_string(i) + " has shape " +
                      shape_to_string(out.targets.back().shape()) + " but the network sees " +
                      shape_to_string(out.inputs.front().shape()));
    }
  }
  return out;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

nn::LossParts eval_prepared(const MappingModel& model, const Prepared& data,
                            const nn::TrainConfig& cfg) {
  nn::LossParts sum;
  const std::size_t n = data.inputs.size();
  const auto order = identity_order(n);
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t begin = 0; begin < n; begin += batch) {
    const std::size_t end = std::min(n, begin + batch);
    Tensor pred = model.net.predict(stack(data.inputs, order, begin, end));
    nn::LossParts part = nn::mapping_loss_value(pred, stack(data.targets, order, begin, end),
                                                cfg.lambda_mse, cfg.lambda_cos);
    const double w = static_cast<double>(end - begin);
    sum.total += part.total * w;
    sum.mse += part.mse * w;
    sum.cos_loss += part.cos_loss * w;
  }
  sum.total /= static_cast<double>(n);
  sum.mse /= static_cast<double>(n);
  sum.cos_loss /= static_cast<double>(n);
  return sum;
}

}  // namespace

PairSet load_pairs(const io::PairManifest& manifest, io::Split split) {
  PairSet out;
  const std::string backbone = manifest.backbone.value_or("toy");
  const Stage stage = manifest.stage ? parse_stage(*manifest.stage) : Stage::kFeat3;
  for (const io::PairEntry* e : manifest.split(split)) {
    out.originals.push_back(FeatureMap::from_tensor(
        io::load_tensor(manifest.resolve(e->original_feature_path)), backbone, stage));
    out.targets.push_back(FeatureMap::from_tensor(
        io::load_tensor(manifest.resolve(e->target_feature_path)), backbone, stage));
    if (out.originals.back().tensor.shape() != out.originals.front().tensor.shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "sample " + e->sample_id + " differs in shape from the rest of the split");
    }
  }
  return out;
}

nn::LossParts evaluate_loss(const MappingModel& model, const PairSet& pairs,
                            const nn::TrainConfig& cfg) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptySplit, "cannot evaluate an empty pair set");
  return eval_prepared(model, prepare(model, pairs), cfg);
}

std::vector<EpochRecord> train_mapping(MappingModel& model, const PairSet& train,
                                       const PairSet& val, const nn::TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw Error(ErrorCode::kEmptySplit, "training split is empty");
  const Prepared train_data = prepare(model, train);
  const Prepared val_data = prepare(model, val);

  auto& params = model.net.parameters();
  nn::AdamW<float> optimizer(params, cfg.optimizer());
  const std::size_t n = train_data.inputs.size();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  const std::uint64_t dropout_seed = mix64(cfg.seed ^ 0x6472'6f70'6f75'7421ULL);

  std::vector<EpochRecord> history;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto order = identity_order(n);
    Pcg32 shuffler(cfg.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[shuffler.below(static_cast<std::uint32_t>(i))]);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    std::uint64_t batch_index = 0;
    for (std::size_t begin = 0; begin < n; begin += batch, ++batch_index) {
      const std::size_t end = std::min(n, begin + batch);
      nn::Tape<float> tape(cfg.mode, dropout_seed,
                           (static_cast<std::uint64_t>(epoch) << 32) | batch_index);
      nn::zero_grad(params);
      auto x = tape.constant(stack(train_data.inputs, order, begin, end));
      auto pred = model.net.forward(tape, x);
      nn::LossParts parts;
      auto loss = nn::mapping_loss(tape, pred, stack(train_data.targets, order, begin, end),
                                   cfg.lambda_mse, cfg.lambda_cos, &parts);
      tape.backward(loss);
      optimizer.step(params);
      const double w = static_cast<double>(end - begin);
      rec.train_loss += parts.total * w;
      rec.train_mse += parts.mse * w;
      rec.train_cosloss += parts.cos_loss * w;
    }
    rec.train_loss /= static_cast<double>(n);
    rec.train_mse /= static_cast<double>(n);
    rec.train_cosloss /= static_cast<double>(n);
    if (!val_data.inputs.empty()) rec.val_loss = eval_prepared(model, val_data, cfg).total;
    history.push_back(rec);
  }
  model.train_config = nn::to_json(cfg);
  return history;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,val_loss,train_mse,train_cosloss\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + num(r.train_loss) + "," +
           (r.val_loss ? num(*r.val_loss) : std::string()) + "," + num(r.train_mse) + "," +
           num(r.train_cosloss) + "\n";
  }
  return out;
}

nlohmann::json history_json(const std::vector<EpochRecord>& history) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : history) {
    out.push_back({{"epoch", r.epoch},
                   {"train_loss", r.train_loss},
                   {"val_loss", r.val_loss ? nlohmann::json(*r.val_loss) : nlohmann::json(nullptr)},
                   {"train_mse", r.train_mse},
                   {"train_cosloss", r.train_cosloss}});
  }
  return out;
}

}  // namespace featprobe::mapping
