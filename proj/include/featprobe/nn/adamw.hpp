#pragma once

#include <vector>

#include "featprobe/nn/graph.hpp"

namespace featprobe::nn {

struct AdamWOptions {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Decoupled weight decay (Loshchilov & Hutter): the decay is applied to the
// weights directly, not folded into the gradient moments.
template <typename T>
class AdamW {
 public:
  AdamW(const std::vector<Parameter<T>>& params, AdamWOptions options);

  void step(std::vector<Parameter<T>>& params);
  long steps() const noexcept { return t_; }

 private:
  AdamWOptions opt_;
  std::vector<BasicTensor<double>> m_, v_;
  long t_ = 0;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace featprobe::nn
