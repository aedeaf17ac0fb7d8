#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace featprobe::metrics {

// One evaluated sample. Optional fields are written as null when absent.
struct MetricRecord {
  std::string sample_id;
  std::string manipulation_id;
  std::string stage;
  std::string model_family;
  double mdn_cs = 0.0;
  std::optional<double> masked_mdn_cs;
  std::optional<std::size_t> mask_cells;
  std::optional<double> ssim;
  std::optional<double> lpips;
  std::optional<bool> top1;
  std::optional<bool> agreement;
  std::optional<double> jsd;
};

nlohmann::json to_json(const MetricRecord& r);

// Means over the records that carry each metric, plus the median MdnCS.
nlohmann::json summarize(const std::vector<MetricRecord>& records);

}  // namespace featprobe::metrics
