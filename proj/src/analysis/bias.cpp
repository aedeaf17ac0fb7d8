#include "featprobe/analysis/bias.hpp"

#include <algorithm>
#include <cmath>

#include "featprobe/stats.hpp"

namespace featprobe::analysis {

BiasReport bias_analyze(const Tensor& w, const Tensor& b, const std::vector<FeatureMap>& samples) {
  if (samples.empty()) throw Error(ErrorCode::kEmptySplit, "bias analysis needs sample features");
  if (w.rank() != 2 || w.dim(0) != w.dim(1) || b.shape() != Shape{w.dim(0)}) {
    throw Error(ErrorCode::kShapeMismatch, "bias analysis needs W [C,C] and b [C]");
  }
  const std::size_t C = w.dim(0);
  BiasReport r;
  double bsq = 0.0;
  for (std::size_t i = 0; i < C; ++i) bsq += double(b[i]) * b[i];
  r.bias_norm = std::sqrt(bsq);

  double ratio_sum = 0.0;
  std::vector<double> cosines;
  std::vector<double> x(C), wx(C);
  for (const auto& f : samples) {
    if (f.channels() != C) {
      throw Error(ErrorCode::kShapeMismatch, "sample has " + std::to_string(f.channels()) +
                                                 " channels, W expects " + std::to_string(C));
    }
    const std::size_t P = f.height() * f.width();
    for (std::size_t p = 0; p < P; ++p) {
      for (std::size_t c = 0; c < C; ++c) x[c] = f.tensor[c * P + p];
      double wxsq = 0.0, dot = 0.0, ysq = 0.0;
      for (std::size_t o = 0; o < C; ++o) {
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) s += double(w[o * C + c]) * x[c];
        wx[o] = s;
        const double y = s + b[o];
        wxsq += s * s;
        dot += s * y;
        ysq += y * y;
      }
      const double wxn = std::sqrt(wxsq);
      const double denom = wxn + r.bias_norm;
      // 0/0 only happens when Wx and b both vanish; the output is then all
      // input, so the location counts as fully input-dominated.
      ratio_sum += denom > 0.0 ? wxn / denom : 1.0;
      ++r.locations;
      if (wxsq == 0.0) {
        ++r.skipped_count;
        continue;
      }
      cosines.push_back(std::clamp(dot / std::sqrt(wxsq * ysq), -1.0, 1.0));
    }
  }
  r.input_dominance_ratio = ratio_sum / static_cast<double>(r.locations);
  r.directional_mdncs = cosines.empty() ? 0.0 : median(cosines);
  return r;
}

}  // namespace featprobe::analysis
