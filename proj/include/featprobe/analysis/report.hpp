#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "featprobe/analysis/bias.hpp"
#include "featprobe/analysis/svd.hpp"

namespace featprobe::analysis {

inline constexpr const char* kEntropyConvention = "sigma-l1-natural-log";

struct LabeledSpectrum {
  std::string label;  // e.g. "<manipulation>/<stage>"
  SvdReport report;
};

// Rank-aligned energy table: one row per rank (1-based), one column per
// report. Shorter spectra leave empty cells. Throws kInvalidParameter when
// `reports` is empty.
struct SpectrumTable {
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> rows;  // rows[rank-1][column]
};

SpectrumTable spectrum_curves(const std::vector<LabeledSpectrum>& reports);
std::string to_csv(const SpectrumTable& table);
nlohmann::json to_json(const SpectrumTable& table);

struct AnalysisIds {
  std::string model_id;
  std::string stage;
  std::string manipulation_id;
};

// Analysis record; singular values are cut to `max_singular_values`
// entries unless it is 0.
nlohmann::json analysis_json(const AnalysisIds& ids, const SvdReport& svd,
                             const std::optional<BiasReport>& bias,
                             std::size_t max_singular_values = 64);

}  // namespace featprobe::analysis
