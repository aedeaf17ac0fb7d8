#include "featprobe/nn/adamw.hpp"

#include <cmath>

namespace featprobe::nn {

template <typename T>
AdamW<T>::AdamW(const std::vector<Parameter<T>>& params, AdamWOptions options) : opt_(options) {
  for (const auto& p : params) {
    m_.emplace_back(p.value().shape());
    v_.emplace_back(p.value().shape());
  }
}

template <typename T>
void AdamW<T>::step(std::vector<Parameter<T>>& params) {
  if (params.size() != m_.size()) {
    throw Error(ErrorCode::kUsage, "AdamW: parameter list changed since construction");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  const double decay = 1.0 - opt_.learning_rate * opt_.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k].value();
    const auto& grad = params[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g;
      v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      double w = static_cast<double>(value[i]) * decay;
      w -= opt_.learning_rate * mhat / (std::sqrt(vhat) + opt_.eps);
      value[i] = static_cast<T>(w);
    }
  }
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace featprobe::nn
