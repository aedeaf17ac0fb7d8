#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "featprobe/nn/graph.hpp"
#include "featprobe/nn/ops.hpp"

namespace featprobe::mapping {

enum class Family { kLinear, kMlp, kCnn, kTransformer };

std::string_view family_name(Family f) noexcept;
Family parse_family(std::string_view name);

// Architecture hyperparameters. Defaults follow the reference mapping table:
//   linear       one C->C dense layer with bias, per location
//   mlp          C->512, ReLU, dropout 0.2, 512->C, per location
//   cnn          conv3x3 C->512, BatchNorm, ReLU, Dropout2d 0.2, conv3x3 512->C
//   transformer  C->512 projection, learned positions, 4 post-norm encoder
//                layers (8 heads, ReLU feed-forward, dropout 0.1), 512->C
// `hidden`, `ffn` and friends can be shrunk for desk-scale runs.
struct ArchConfig {
  Family family = Family::kLinear;
  std::size_t channels = 0;
  std::size_t hidden = 512;
  std::size_t heads = 8;
  std::size_t layers = 4;
  std::size_t ffn = 2048;
  // Negative selects the family default (0.2 mlp/cnn, 0.1 transformer).
  double dropout = -1.0;
  // Token grid for the transformer's positional embedding.
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  bool identity_init = false;
  std::uint64_t init_seed = 0;

  double effective_dropout() const;
  void validate() const;
};

nlohmann::json to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const nlohmann::json& j, const std::string& pointer = "");

// Parameters plus batchnorm buffers for one mapping family. forward() maps a
// [B,C,H,W] batch to [B,C,H,W].
template <typename T>
class MappingNet {
 public:
  explicit MappingNet(ArchConfig arch);

  const ArchConfig& arch() const noexcept { return arch_; }
  std::vector<nn::Parameter<T>>& parameters() noexcept { return params_; }
  const std::vector<nn::Parameter<T>>& parameters() const noexcept { return params_; }
  nn::Parameter<T>& parameter(std::string_view name);
  const nn::Parameter<T>& parameter(std::string_view name) const;

  std::vector<nn::BatchNormState<T>>& batchnorm_states() noexcept { return bn_; }
  const std::vector<nn::BatchNormState<T>>& batchnorm_states() const noexcept { return bn_; }

  // Train-mode passes update batchnorm running statistics.
  nn::Var<T> forward(nn::Tape<T>& tape, const nn::Var<T>& x);

  // Graph-free inference; never mutates the network, so a const MappingNet
  // can be shared across threads.
  BasicTensor<T> predict(const BasicTensor<T>& x, nn::Mode mode = nn::Mode::kEval,
                         std::uint64_t seed = 0) const;

  // Deep copy at another precision (float64 copies feed gradient checks).
  template <typename U>
  MappingNet<U> cast() const;

 private:
  template <typename>
  friend class MappingNet;

  MappingNet(ArchConfig arch, bool initialize);
  void add(std::string name, BasicTensor<T> value);
  void initialize();
  nn::Var<T> run(nn::Tape<T>& tape, const nn::Var<T>& x, std::vector<nn::BatchNormState<T>>& bn) const;
  nn::Var<T> encoder_layer(nn::Tape<T>& tape, const nn::Var<T>& x, std::size_t index) const;
  const nn::Var<T>& var(std::string_view name) const;

  ArchConfig arch_;
  std::vector<nn::Parameter<T>> params_;
  std::vector<nn::BatchNormState<T>> bn_;
};

extern template class MappingNet<float>;
extern template class MappingNet<double>;

}  // namespace featprobe::mapping
