#include "adatrans/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adatrans {

void TransferProblem::validate() const {
  const auto cols = target_X.cols();
  if (cols < 1) throw std::invalid_argument("TransferProblem: p must be >= 1");
  if (target_y.size() != target_X.rows())
    throw std::invalid_argument("TransferProblem: target_y length != target_X rows");
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const auto& s = sources[k];
    if (s.X.cols() != cols)
      throw std::invalid_argument("TransferProblem: source " + std::to_string(k + 1) +
                                  " has mismatched column count");
    if (s.y.size() != s.X.rows())
      throw std::invalid_argument("TransferProblem: source " + std::to_string(k + 1) +
                                  " y length != X rows");
    if (s.X.rows() != sources.front().X.rows())
      throw std::invalid_argument("TransferProblem: sources must share a common row count");
  }
}

void TaskDistribution::validate(double c) const {
  if (sigma.size() != noise_sd.size())
    throw std::invalid_argument("TaskDistribution: sigma/noise_sd size mismatch");
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    const Matrix& S = sigma[k];
    if (S.rows() != S.cols())
      throw std::invalid_argument("TaskDistribution: covariance " + std::to_string(k) +
                                  " not square");
    if (!S.isApprox(S.transpose(), 1e-12))
      throw std::invalid_argument("TaskDistribution: covariance " + std::to_string(k) +
                                  " not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo <= 0.0)
      throw std::invalid_argument("TaskDistribution: covariance " + std::to_string(k) +
                                  " not positive definite");
    if (lo < 1.0 / c - 1e-12 || hi > c + 1e-12)
      throw std::invalid_argument("TaskDistribution: covariance " + std::to_string(k) +
                                  " eigenvalues outside [1/c, c]");
    if (noise_sd[k] < 0.0 || noise_sd[k] > c + 1e-12)
      throw std::invalid_argument("TaskDistribution: noise sd " + std::to_string(k) +
                                  " outside [0, c]");
  }
}

IndexSet support_of(const Vector& v) {
  IndexSet s;
  for (int j = 0; j < v.size(); ++j)
    if (v[j] != 0.0) s.push_back(j);
  return s;
}

double l2_error_sq(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("l2_error_sq: length mismatch (" +
                                std::to_string(estimate.size()) + " vs " +
                                std::to_string(truth.size()) + ")");
  return (estimate - truth).squaredNorm();
}

double support_f1(const IndexSet& estimated, const IndexSet& truth) {
  if (estimated.empty() && truth.empty()) return 1.0;
  IndexSet a = estimated, b = truth;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  IndexSet common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  // F1 = 2|A∩B| / (|A| + |B|), the harmonic mean of precision and recall.
  return 2.0 * static_cast<double>(common.size()) /
         static_cast<double>(a.size() + b.size());
}

}  // namespace adatrans
