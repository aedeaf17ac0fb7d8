#include "featprobe/metrics/report.hpp"

#include "featprobe/stats.hpp"

namespace featprobe::metrics {

namespace {

template <typename T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// Mean of the present values, or null with none.
template <typename F>
nlohmann::json mean_of(const std::vector<MetricRecord>& records, F get) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (auto v = get(r)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return nullptr;
  return sum / static_cast<double>(n);
}

}  // namespace

nlohmann::json to_json(const MetricRecord& r) {
  return {{"sample_id", r.sample_id},
          {"manipulation_id", r.manipulation_id},
          {"stage", r.stage},
          {"model_family", r.model_family},
          {"mdn_cs", r.mdn_cs},
          {"masked_mdn_cs", opt(r.masked_mdn_cs)},
          {"mask_cells", opt(r.mask_cells)},
          {"ssim", opt(r.ssim)},
          {"lpips", opt(r.lpips)},
          {"top1", opt(r.top1)},
          {"agreement", opt(r.agreement)},
          {"jsd", opt(r.jsd)}};
}

nlohmann::json summarize(const std::vector<MetricRecord>& records) {
  std::vector<double> cs;
  for (const auto& r : records) cs.push_back(r.mdn_cs);
  auto as_double = [](const std::optional<bool>& b) -> std::optional<double> {
    if (!b) return std::nullopt;
    return *b ? 1.0 : 0.0;
  };
  return {{"count", records.size()},
          {"mdn_cs_mean", mean_of(records, [](const MetricRecord& r) { return std::optional(r.mdn_cs); })},
          {"mdn_cs_median", cs.empty() ? nlohmann::json(nullptr) : nlohmann::json(median(cs))},
          {"masked_mdn_cs_mean", mean_of(records, [](const MetricRecord& r) { return r.masked_mdn_cs; })},
          {"ssim_mean", mean_of(records, [](const MetricRecord& r) { return r.ssim; })},
          {"lpips_mean", mean_of(records, [](const MetricRecord& r) { return r.lpips; })},
          {"top1_accuracy", mean_of(records, [&](const MetricRecord& r) { return as_double(r.top1); })},
          {"agreement", mean_of(records, [&](const MetricRecord& r) { return as_double(r.agreement); })},
          {"jsd_mean", mean_of(records, [](const MetricRecord& r) { return r.jsd; })}};
}

}  // namespace featprobe::metrics
