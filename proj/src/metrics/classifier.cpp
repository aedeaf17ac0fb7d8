#include "featprobe/metrics/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "featprobe/io/files.hpp"
#include "featprobe/io/npy.hpp"

namespace featprobe::metrics {

namespace fs = std::filesystem;

namespace {
constexpr const char* kHeadFormat = "featprobe-classifier-head";
}  // namespace

void ClassifierHead::validate() const {
  if (weight.rank() != 2 || weight.dim(0) < 2) {
    throw Error(ErrorCode::kInvalidParameter, "classifier weight must be [K,C] with K >= 2");
  }
  const Shape c{weight.dim(1)}, k{weight.dim(0)};
  if (ln_weight.shape() != c || ln_bias.shape() != c || bias.shape() != k) {
    throw Error(ErrorCode::kShapeMismatch, "classifier head parameters disagree on C or K");
  }
}

std::vector<double> classify(const ClassifierHead& head, const FeatureMap& f) {
  head.validate();
  if (f.channels() != head.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "head expects " + std::to_string(head.channels()) +
                                               " channels, features have " +
                                               std::to_string(f.channels()));
  }
  const std::size_t C = f.channels(), P = f.height() * f.width();
  std::vector<double> pooled(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0.0;
    for (std::size_t p = 0; p < P; ++p) s += f.tensor[c * P + p];
    pooled[c] = s / static_cast<double>(P);
  }
  double mean = 0.0;
  for (double v : pooled) mean += v;
  mean /= static_cast<double>(C);
  double var = 0.0;
  for (double v : pooled) var += (v - mean) * (v - mean);
  var /= static_cast<double>(C);
  const double inv = 1.0 / std::sqrt(var + head.eps);
  for (std::size_t c = 0; c < C; ++c) {
    pooled[c] = (pooled[c] - mean) * inv * head.ln_weight[c] + head.ln_bias[c];
  }
  const std::size_t K = head.classes();
  std::vector<double> logits(K);
  for (std::size_t k = 0; k < K; ++k) {
    double s = head.bias[k];
    for (std::size_t c = 0; c < C; ++c) s += head.weight[k * C + c] * pooled[c];
    logits[k] = s;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - top);
    z += v;
  }
  for (auto& v : logits) v /= z;
  return logits;
}

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size() || p.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "jsd needs two distributions of equal length");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) d += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) d += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::max(d, 0.0);
}

std::size_t argmax(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

SemanticMetrics semantic_metrics(const ClassifierHead& head, const std::vector<FeatureMap>& mapped,
                                 const std::vector<FeatureMap>& target,
                                 const std::vector<int>& labels) {
  if (mapped.empty()) throw Error(ErrorCode::kEmptySplit, "semantic metrics on an empty batch");
  if (mapped.size() != target.size() || (!labels.empty() && labels.size() != mapped.size())) {
    throw Error(ErrorCode::kShapeMismatch, "semantic metrics need batch-aligned inputs");
  }
  SemanticMetrics out;
  out.count = mapped.size();
  std::size_t correct = 0, agree = 0;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    const auto p = classify(head, mapped[i]);
    const auto q = classify(head, target[i]);
    if (argmax(p) == argmax(q)) ++agree;
    if (!labels.empty() && static_cast<int>(argmax(p)) == labels[i]) ++correct;
    out.jsd_mean += jsd(p, q);
  }
  const double n = static_cast<double>(mapped.size());
  out.agreement = static_cast<double>(agree) / n;
  out.jsd_mean /= n;
  if (!labels.empty()) out.top1_accuracy = static_cast<double>(correct) / n;
  return out;
}

ClassifierHead load_classifier_head(const fs::path& dir) {
  const nlohmann::json meta = io::read_json(dir / "head.json");
  if (!meta.is_object() || meta.value("format", "") != kHeadFormat) {
    throw Error(ErrorCode::kSchema, "not a classifier head: " + dir.string(), "/format");
  }
  ClassifierHead head;
  head.eps = meta.value("eps", head.eps);
  head.ln_weight = io::load_tensor(dir / "ln_weight.npy");
  head.ln_bias = io::load_tensor(dir / "ln_bias.npy");
  head.weight = io::load_tensor(dir / "weight.npy");
  head.bias = io::load_tensor(dir / "bias.npy");
  head.validate();
  return head;
}

void save_classifier_head(const ClassifierHead& head, const fs::path& dir) {
  head.validate();
  io::write_directory_atomic(dir, [&](const fs::path& tmp) {
    io::save_tensor(head.ln_weight, tmp / "ln_weight.npy");
    io::save_tensor(head.ln_bias, tmp / "ln_bias.npy");
    io::save_tensor(head.weight, tmp / "weight.npy");
    io::save_tensor(head.bias, tmp / "bias.npy");
    io::write_json_atomic(tmp / "head.json", {{"format", kHeadFormat}, {"eps", head.eps}});
  });
}

}  // namespace featprobe::metrics
