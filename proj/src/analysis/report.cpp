#include "featprobe/analysis/report.hpp"

#include <cstdio>

namespace featprobe::analysis {

SpectrumTable spectrum_curves(const std::vector<LabeledSpectrum>& reports) {
  if (reports.empty()) throw Error(ErrorCode::kInvalidParameter, "no spectra to tabulate");
  SpectrumTable table;
  std::size_t longest = 0;
  for (const auto& r : reports) {
    table.labels.push_back(r.label);
    longest = std::max(longest, r.report.energy.size());
  }
  table.rows.assign(longest, std::vector<std::optional<double>>(reports.size()));
  for (std::size_t col = 0; col < reports.size(); ++col) {
    const auto& energy = reports[col].report.energy;
    for (std::size_t i = 0; i < energy.size(); ++i) table.rows[i][col] = energy[i];
  }
  return table;
}

std::string to_csv(const SpectrumTable& table) {
  std::string out = "rank";
  for (const auto& l : table.labels) out += "," + l;
  out += "\n";
  char buf[64];
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out += std::to_string(i + 1);
    for (const auto& cell : table.rows[i]) {
      out += ",";
      if (cell) {
        std::snprintf(buf, sizeof buf, "%.17g", *cell);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

nlohmann::json to_json(const SpectrumTable& table) {
  nlohmann::json columns = nlohmann::json::object();
  for (std::size_t col = 0; col < table.labels.size(); ++col) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& row : table.rows) {
      values.push_back(row[col] ? nlohmann::json(*row[col]) : nlohmann::json(nullptr));
    }
    columns[table.labels[col]] = values;
  }
  nlohmann::json ranks = nlohmann::json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i) ranks.push_back(i + 1);
  return {{"rank", ranks}, {"energy", columns}};
}

nlohmann::json analysis_json(const AnalysisIds& ids, const SvdReport& svd,
                             const std::optional<BiasReport>& bias,
                             std::size_t max_singular_values) {
  std::vector<double> sv = svd.singular_values;
  const bool truncated = max_singular_values != 0 && sv.size() > max_singular_values;
  if (truncated) sv.resize(max_singular_values);
  nlohmann::json j = {{"model_id", ids.model_id},
                      {"stage", ids.stage},
                      {"manipulation_id", ids.manipulation_id},
                      {"singular_values", sv},
                      {"singular_values_truncated", truncated},
                      {"rank", svd.singular_values.size()},
                      {"spectral_entropy", svd.spectral_entropy},
                      {"effective_rank", svd.effective_rank},
                      {"reconstruction_error", svd.reconstruction_error},
                      {"entropy_convention", kEntropyConvention},
                      {"dominance_convention", "mean |Wx|/(|Wx|+|b|)"}};
  if (bias) {
    j["input_dominance_ratio"] = bias->input_dominance_ratio;
    j["directional_mdncs"] = bias->directional_mdncs;
    j["bias_norm"] = bias->bias_norm;
    j["bias_locations"] = bias->locations;
    j["skipped_count"] = bias->skipped_count;
  } else {
    j["input_dominance_ratio"] = nullptr;
    j["directional_mdncs"] = nullptr;
    j["bias_norm"] = nullptr;
  }
  return j;
}

}  // namespace featprobe::analysis
