#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "featprobe/io/tensor.hpp"
#include "featprobe/rng.hpp"

namespace featprobe::nn {

enum class Mode { kTrain, kEval };

// A value in the computation graph. `grad` stays empty until something
// propagates into it. `backward` reads this node's grad and accumulates into
// the parents it captured.
template <typename T>
struct Node {
  BasicTensor<T> value;
  BasicTensor<T> grad;
  std::function<void(const BasicTensor<T>&)> backward;
  bool requires_grad = false;

  BasicTensor<T>& grad_buffer() {
    if (grad.empty()) grad = BasicTensor<T>(value.shape());
    return grad;
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
struct Parameter {
  std::string name;
  Var<T> var;

  const BasicTensor<T>& value() const { return var->value; }
  BasicTensor<T>& value() { return var->value; }
  BasicTensor<T>& grad() { return var->grad_buffer(); }
};

template <typename T>
Parameter<T> make_parameter(std::string name, BasicTensor<T> value) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return {std::move(name), std::move(node)};
}

template <typename T>
void zero_grad(std::vector<Parameter<T>>& params) {
  for (auto& p : params) p.var->grad_buffer().fill(T{0});
}

// Records operations in creation order; reverse creation order is a valid
// topological order for backward. A tape is used for one forward/backward
// pass and then discarded.
template <typename T>
class Tape {
 public:
  explicit Tape(Mode mode = Mode::kEval, std::uint64_t seed = 0, std::uint64_t stream = 0,
                bool record = true)
      : mode_(mode), rng_(seed, stream), record_(record) {}

  Mode mode() const noexcept { return mode_; }
  bool training() const noexcept { return mode_ == Mode::kTrain; }
  bool recording() const noexcept { return record_; }
  Pcg32& rng() noexcept { return rng_; }

  Var<T> constant(BasicTensor<T> value) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    return node;
  }

  // Wraps an op result. The backward closure is kept only when some input
  // needs a gradient and the tape is recording.
  Var<T> record(BasicTensor<T> value, bool requires_grad,
                std::function<void(const BasicTensor<T>&)> backward) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    if (record_ && requires_grad) {
      node->requires_grad = true;
      node->backward = std::move(backward);
      nodes_.push_back(node);
    }
    return node;
  }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  // Throws kUsage when `loss` was not produced on this tape or is not scalar.
  void backward(const Var<T>& loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  Mode mode_;
  Pcg32 rng_;
  bool record_;
  std::vector<Var<T>> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace featprobe::nn
