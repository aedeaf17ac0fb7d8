#pragma once

#include <functional>
#include <string>
#include <vector>

#include "featprobe/nn/graph.hpp"

namespace featprobe::nn {

struct GradCheckReport {
  // max over parameters of |g_analytic - g_numeric|_2 / max(|g_analytic|_2, |g_numeric|_2, 1e-6)
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t evaluations = 0;
};

// Compares backward() against central differences. `build_loss` must record
// a scalar loss on the supplied tape from the current parameter values and be
// deterministic (use a fixed tape seed for dropout).
template <typename T>
GradCheckReport check_gradients(std::vector<Parameter<T>>& params,
                                 const std::function<Var<T>(Tape<T>&)>& build_loss,
                                 double step = 1e-5, Mode mode = Mode::kTrain,
                                 std::uint64_t seed = 0);

}  // namespace featprobe::nn
