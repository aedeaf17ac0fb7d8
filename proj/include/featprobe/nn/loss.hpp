#pragma once

#include "featprobe/nn/graph.hpp"

namespace featprobe::nn {

// Guard for cosine denominators, shared with the MdnCS metric.
inline constexpr double kCosineEps = 1e-8;

struct LossParts {
  double total = 0.0;
  double mse = 0.0;
  // 1 - batch mean of per-sample median cosine.
  double cos_loss = 0.0;
};

// lambda_mse * MSE(pred, target) + lambda_cos * (1 - mean_b median_{h,w} cos).
// MSE is averaged over all B*C*H*W elements. The median subgradient goes to
// the middle element, or half to each of the two middle elements for even
// counts. `target` is treated as a constant.
template <typename T>
Var<T> mapping_loss(Tape<T>& tape, const Var<T>& pred, const BasicTensor<T>& target,
                    double lambda_mse, double lambda_cos, LossParts* parts = nullptr);

// Same value without a graph, in float64.
template <typename T>
LossParts mapping_loss_value(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                             double lambda_mse, double lambda_cos);

}  // namespace featprobe::nn
