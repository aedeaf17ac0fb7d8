#include "featprobe/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace featprobe::nn {

namespace {

// Gradients that vanish identically (a bias feeding a train-mode batchnorm)
// leave only finite-difference noise of order 1e-10; comparing against this
// floor keeps them from reading as a 100% error.
constexpr double kGradientFloor = 1e-6;

}  // namespace

template <typename T>
GradCheckReport check_gradients(std::vector<Parameter<T>>& params,
                                 const std::function<Var<T>(Tape<T>&)>& build_loss, double step,
                                 Mode mode, std::uint64_t seed) {
  GradCheckReport report;
  zero_grad(params);
  {
    Tape<T> tape(mode, seed);
    auto loss = build_loss(tape);
    tape.backward(loss);
  }
  auto eval = [&]() {
    Tape<T> tape(mode, seed, 0, false);
    ++report.evaluations;
    return static_cast<double>(build_loss(tape)->value[0]);
  };
  for (auto& p : params) {
    const BasicTensor<T> analytic = p.grad();
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
    for (std::size_t i = 0; i < p.value().size(); ++i) {
      const T saved = p.value()[i];
      p.value()[i] = static_cast<T>(saved + step);
      const double up = eval();
      p.value()[i] = static_cast<T>(saved - step);
      const double down = eval();
      p.value()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i];
      diff_sq += (a - numeric) * (a - numeric);
      a_sq += a * a;
      n_sq += numeric * numeric;
    }
    const double denom = std::max({std::sqrt(a_sq), std::sqrt(n_sq), kGradientFloor});
    const double rel = std::sqrt(diff_sq) / denom;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_parameter = p.name;
    }
  }
  return report;
}

template GradCheckReport check_gradients(std::vector<Parameter<float>>&,
                                         const std::function<Var<float>(Tape<float>&)>&, double, Mode,
                                         std::uint64_t);
template GradCheckReport check_gradients(std::vector<Parameter<double>>&,
                                         const std::function<Var<double>(Tape<double>&)>&, double, Mode,
                                         std::uint64_t);

}  // namespace featprobe::nn
