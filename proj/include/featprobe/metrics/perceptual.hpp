#pragma once

#include <filesystem>
#include <vector>

#include "featprobe/io/tensor.hpp"

namespace featprobe::metrics {

struct PerceptualLayer {
  Tensor features;  // [C,H,W]
  double weight = 1.0;
};

// Per-layer activations of a perceptual network for one image.
struct PerceptualStack {
  std::vector<PerceptualLayer> layers;
  // True when every location already has unit channel norm.
  bool normalized = false;
};

// sum_l w_l * mean_{h,w} |a_l - b_l|^2 over unit-normalized channel vectors.
// Unnormalized stacks are normalized on the fly. Throws kShapeMismatch when
// the layers do not line up and kInvalidParameter for negative weights.
double lpips_distance(const PerceptualStack& a, const PerceptualStack& b);

// Directory with stack.json ({"format", "normalized", "layers":[{"file","weight"}]})
// and one NPY per layer.
PerceptualStack load_perceptual_stack(const std::filesystem::path& dir);
void save_perceptual_stack(const PerceptualStack& stack, const std::filesystem::path& dir);

}  // namespace featprobe::metrics
