#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "featprobe/io/feature_map.hpp"

namespace featprobe::metrics {

// Frozen classification head: layernorm over C, then an affine map to classes.
struct ClassifierHead {
  Tensor ln_weight;  // [C]
  Tensor ln_bias;    // [C]
  Tensor weight;     // [K,C]
  Tensor bias;       // [K]
  double eps = 1e-6;

  std::size_t channels() const { return weight.dim(1); }
  std::size_t classes() const { return weight.dim(0); }
  // Throws kShapeMismatch / kInvalidParameter on inconsistent parameters.
  void validate() const;
};

// Global average pool over (h,w), layernorm, affine, softmax.
std::vector<double> classify(const ClassifierHead& head, const FeatureMap& f);

// Jensen-Shannon divergence in nats; 0 log 0 is taken as 0.
double jsd(const std::vector<double>& p, const std::vector<double>& q);

std::size_t argmax(const std::vector<double>& p);

struct SemanticMetrics {
  std::optional<double> top1_accuracy;  // only with labels
  double agreement = 0.0;
  double jsd_mean = 0.0;
  std::size_t count = 0;
};

// `labels` may be empty (no accuracy) or batch-aligned. Throws kEmptySplit
// for an empty batch.
SemanticMetrics semantic_metrics(const ClassifierHead& head, const std::vector<FeatureMap>& mapped,
                                 const std::vector<FeatureMap>& target,
                                 const std::vector<int>& labels = {});

// Directory with head.json ({"format", "eps"}) and ln_weight/ln_bias/weight/bias NPY files.
ClassifierHead load_classifier_head(const std::filesystem::path& dir);
void save_classifier_head(const ClassifierHead& head, const std::filesystem::path& dir);

}  // namespace featprobe::metrics
