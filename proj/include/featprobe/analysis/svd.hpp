#pragma once

#include <vector>

#include "featprobe/io/tensor.hpp"

namespace featprobe::analysis {

struct SvdReport {
  std::vector<double> singular_values;  // descending
  std::vector<double> energy;           // sigma_i / sum_j sigma_j
  double spectral_entropy = 0.0;        // -sum p ln p
  double effective_rank = 0.0;          // exp(entropy)
  // |U S V^T - W|_F / |W|_F (0 for an all-zero W).
  double reconstruction_error = 0.0;
};

// Full SVD of a square matrix in float64. Throws kShapeMismatch for a
// non-square input and kNonFinite for NaN/Inf entries.
SvdReport svd_analyze(const Tensor64& w);
SvdReport svd_analyze(const Tensor& w);

// Entropy of the sigma-normalized spectrum; zero-sum spectra give 0.
double spectral_entropy(const std::vector<double>& singular_values);

}  // namespace featprobe::analysis
