#include "featprobe/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "featprobe/stats.hpp"

namespace featprobe::nn {

namespace {

struct CosineTerms {
  // Indexed by b * H*W + location.
  std::vector<double> cos, pnorm, tnorm;
  std::vector<MedianPick> picks;  // per sample
};

template <typename T>
void check_shapes(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  if (pred.shape() != target.shape() || pred.rank() != 4) {
    throw Error(ErrorCode::kShapeMismatch, "mapping_loss: pred " + shape_to_string(pred.shape()) +
                                               " and target " + shape_to_string(target.shape()) +
                                               " must be equal [B,C,H,W]");
  }
}

template <typename T>
CosineTerms cosine_terms(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  const auto& s = pred.shape();
  const std::size_t B = s[0], C = s[1], P = s[2] * s[3];
  CosineTerms terms;
  terms.cos.resize(B * P);
  terms.pnorm.resize(B * P);
  terms.tnorm.resize(B * P);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t p = 0; p < P; ++p) {
      double dot = 0.0, pp = 0.0, tt = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t i = (b * C + c) * P + p;
        dot += static_cast<double>(pred[i]) * target[i];
        pp += static_cast<double>(pred[i]) * pred[i];
        tt += static_cast<double>(target[i]) * target[i];
      }
      const std::size_t k = b * P + p;
      terms.pnorm[k] = std::sqrt(pp);
      terms.tnorm[k] = std::sqrt(tt);
      // sqrt(pp * tt) rather than |p||t| so identical vectors give exactly 1.
      const double c = dot / std::max(std::sqrt(pp * tt), kCosineEps);
      terms.cos[k] = std::clamp(c, -1.0, 1.0);
    }
    terms.picks.push_back(median_pick(std::span<const double>(terms.cos.data() + b * P, P)));
  }
  return terms;
}

template <typename T>
double mse_of(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = static_cast<double>(pred[i]) - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

template <typename T>
LossParts combine(const BasicTensor<T>& pred, const BasicTensor<T>& target, const CosineTerms& terms,
                  double lambda_mse, double lambda_cos) {
  LossParts parts;
  parts.mse = mse_of(pred, target);
  double mean_median = 0.0;
  for (const auto& pick : terms.picks) mean_median += pick.value;
  mean_median /= static_cast<double>(terms.picks.size());
  parts.cos_loss = 1.0 - mean_median;
  parts.total = lambda_mse * parts.mse + lambda_cos * parts.cos_loss;
  return parts;
}

}  // namespace

template <typename T>
LossParts mapping_loss_value(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                             double lambda_mse, double lambda_cos) {
  check_shapes(pred, target);
  return combine(pred, target, cosine_terms(pred, target), lambda_mse, lambda_cos);
}

template <typename T>
Var<T> mapping_loss(Tape<T>& tape, const Var<T>& pred, const BasicTensor<T>& target,
                    double lambda_mse, double lambda_cos, LossParts* parts_out) {
  check_shapes(pred->value, target);
  auto terms = cosine_terms(pred->value, target);
  LossParts parts = combine(pred->value, target, terms, lambda_mse, lambda_cos);
  if (parts_out) *parts_out = parts;

  BasicTensor<T> value(Shape{1}, static_cast<T>(parts.total));
  return tape.record(std::move(value), pred->requires_grad,
                     [pred, target, lambda_mse, lambda_cos, terms = std::move(terms)](
                         const BasicTensor<T>& g) {
    const auto& s = pred->value.shape();
    const std::size_t B = s[0], C = s[1], P = s[2] * s[3];
    const double upstream = g[0];
    auto& dp = pred->grad_buffer();
    const double mse_scale = upstream * lambda_mse * 2.0 / static_cast<double>(pred->value.size());
    for (std::size_t i = 0; i < dp.size(); ++i) {
      dp[i] += static_cast<T>(mse_scale * (static_cast<double>(pred->value[i]) - target[i]));
    }
    if (lambda_cos == 0.0) return;
    for (std::size_t b = 0; b < B; ++b) {
      const MedianPick& pick = terms.picks[b];
      // d(cos_loss)/d(cos_k) = -1/B for the median, split across the middle pair.
      const double w = -upstream * lambda_cos / static_cast<double>(B);
      auto route = [&](std::size_t p, double weight) {
        const std::size_t k = b * P + p;
        const double pn = terms.pnorm[k], tn = terms.tnorm[k];
        const double denom = pn * tn;
        for (std::size_t c = 0; c < C; ++c) {
          const std::size_t i = (b * C + c) * P + p;
          double dcos;
          if (denom > kCosineEps) {
            dcos = target[i] / denom - terms.cos[k] * pred->value[i] / (pn * pn);
          } else {
            dcos = target[i] / kCosineEps;
          }
          dp[i] += static_cast<T>(weight * dcos);
        }
      };
      if (pick.lo == pick.hi) {
        route(pick.lo, w);
      } else {
        route(pick.lo, 0.5 * w);
        route(pick.hi, 0.5 * w);
      }
    }
  });
}

template Var<float> mapping_loss(Tape<float>&, const Var<float>&, const BasicTensor<float>&, double,
                                 double, LossParts*);
template Var<double> mapping_loss(Tape<double>&, const Var<double>&, const BasicTensor<double>&,
                                  double, double, LossParts*);
template LossParts mapping_loss_value(const BasicTensor<float>&, const BasicTensor<float>&, double,
                                      double);
template LossParts mapping_loss_value(const BasicTensor<double>&, const BasicTensor<double>&, double,
                                      double);

}  // namespace featprobe::nn
