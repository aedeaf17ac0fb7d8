#pragma once

#include "featprobe/nn/graph.hpp"

namespace featprobe::nn {

// Shapes use the [B,C,H,W] convention for maps and [B,L,D] for token
// sequences. Every op validates its input shapes and throws kShapeMismatch.

// y = x W^T + b over the last axis of x. W is [out,in]; b is [out] or null.
template <typename T>
Var<T> dense(Tape<T>& tape, const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x);

// Inverted dropout: kept elements are scaled by 1/(1-p). Identity in eval mode.
template <typename T>
Var<T> dropout(Tape<T>& tape, const Var<T>& x, double p);

// Drops whole (b,c) channels of a [B,C,H,W] map.
template <typename T>
Var<T> dropout2d(Tape<T>& tape, const Var<T>& x, double p);

// 3x3 convolution, stride 1, zero padding 1. weight [Cout,Cin,3,3], bias [Cout].
template <typename T>
Var<T> conv3x3(Tape<T>& tape, const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <typename T>
struct BatchNormState {
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(std::size_t channels = 1)
      : running_mean(Shape{channels}, T{0}), running_var(Shape{channels}, T{1}) {}
};

// Batch statistics over (B,H,W) in train mode (running stats updated with
// the unbiased variance); running statistics in eval mode.
template <typename T>
Var<T> batchnorm2d(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                   BatchNormState<T>& state);

// Normalizes over the last axis.
template <typename T>
Var<T> layernorm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                 double eps = 1e-5);

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

// x [B,L,D] + pos [L,D] broadcast over the batch.
template <typename T>
Var<T> add_positional(Tape<T>& tape, const Var<T>& x, const Var<T>& pos);

// [B,C,H,W] -> [B,H*W,C] and back.
template <typename T>
Var<T> to_tokens(Tape<T>& tape, const Var<T>& x);
template <typename T>
Var<T> from_tokens(Tape<T>& tape, const Var<T>& x, std::size_t height, std::size_t width);

// Scaled dot-product attention over [B,L,D] inputs split into `heads` heads.
template <typename T>
Var<T> attention(Tape<T>& tape, const Var<T>& q, const Var<T>& k, const Var<T>& v,
                 std::size_t heads);

// Splits the last axis of x into `parts` equal chunks.
template <typename T>
std::vector<Var<T>> split_last(Tape<T>& tape, const Var<T>& x, std::size_t parts);

// sum_i x_i * w_i as a [1] tensor; reduces layer outputs to a scalar in
// gradient checks.
template <typename T>
Var<T> weighted_sum(Tape<T>& tape, const Var<T>& x, const BasicTensor<T>& weights);

}  // namespace featprobe::nn
