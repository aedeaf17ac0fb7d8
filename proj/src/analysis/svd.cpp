#include "featprobe/analysis/svd.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace featprobe::analysis {

double spectral_entropy(const std::vector<double>& sv) {
  double total = 0.0;
  for (double s : sv) total += s;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double s : sv) {
    const double p = s / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

SvdReport svd_analyze(const Tensor64& w) {
  if (w.rank() != 2 || w.dim(0) != w.dim(1)) {
    throw Error(ErrorCode::kShapeMismatch, "svd_analyze needs a square matrix, got " +
                                               shape_to_string(w.shape()));
  }
  if (!w.all_finite()) throw Error(ErrorCode::kNonFinite, "weight matrix has non-finite entries");
  const auto n = static_cast<Eigen::Index>(w.dim(0));
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = w[static_cast<std::size_t>(i * n + j)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();

  SvdReport r;
  r.singular_values.assign(s.data(), s.data() + s.size());
  double total = 0.0;
  for (double v : r.singular_values) total += v;
  for (double v : r.singular_values) r.energy.push_back(total > 0.0 ? v / total : 0.0);
  r.spectral_entropy = spectral_entropy(r.singular_values);
  r.effective_rank = std::exp(r.spectral_entropy);
  const double norm = m.norm();
  const Eigen::MatrixXd rebuilt = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  r.reconstruction_error = norm > 0.0 ? (rebuilt - m).norm() / norm : 0.0;
  return r;
}

SvdReport svd_analyze(const Tensor& w) { return svd_analyze(w.cast<double>()); }

}  // namespace featprobe::analysis
