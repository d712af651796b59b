#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace adatrans {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sorted, 0-based feature indices.
using IndexSet = std::vector<int>;

struct TaskSample {
  Matrix X;
  Vector y;
};

/// One target sample plus K source samples sharing the feature dimension p.
/// Sources have a common row count; N = n_T + K * n_S.
struct TransferProblem {
  Matrix target_X;
  Vector target_y;
  std::vector<TaskSample> sources;

  int p() const { return static_cast<int>(target_X.cols()); }
  int n_target() const { return static_cast<int>(target_X.rows()); }
  int n_source() const {
    return sources.empty() ? 0 : static_cast<int>(sources.front().X.rows());
  }
  int num_sources() const { return static_cast<int>(sources.size()); }
  int total_rows() const { return n_target() + num_sources() * n_source(); }

  // Throws std::invalid_argument on any shape violation.
  void validate() const;
};

/// True parameters of a synthetic instance: target coefficients, per-source
/// contrasts, their supports and the signal/contrast magnitudes.
struct GroundTruth {
  Vector beta;
  std::vector<Vector> deltas;
  IndexSet support0;                 // S0 = {j : beta_j != 0}
  std::vector<IndexSet> supports;    // S_k = {j : delta_k_j != 0}
  double h_min0 = 0.0;               // min |beta_j| over S0
  double h_min_k = 0.0;              // min over k, j in S_k of |delta_k_j|
  std::vector<double> h_l1;          // ||delta_k||_1, exact

  int sparsity() const { return static_cast<int>(support0.size()); }
  int num_sources() const { return static_cast<int>(deltas.size()); }
};

/// Per-task sampling distribution: covariance of the rows and noise sd.
struct TaskDistribution {
  std::vector<Matrix> sigma;       // K+1 covariance matrices, index 0 = target
  std::vector<double> noise_sd;    // K+1 noise standard deviations

  // Checks symmetry, positive definiteness, eigenvalues in [1/c, c]
  // and noise_sd <= c. Throws std::invalid_argument otherwise.
  void validate(double c) const;
};

/// Fitted coefficients plus solver diagnostics.
struct Estimate {
  Vector beta_hat;
  std::vector<Vector> delta_hats;
  int iterations = 0;
  double kkt_residual = 0.0;       // on the exact problem that was solved
  double objective_value = 0.0;
  bool converged = true;
  double constraint_gap = 0.0;     // l_inf constraint violation, if any
  bool used_pinv_fallback = false;
};

IndexSet support_of(const Vector& v);

/// Squared Euclidean distance; throws std::invalid_argument on length mismatch.
double l2_error_sq(const Vector& estimate, const Vector& truth);

/// Harmonic mean of precision and recall over index sets; 1 when both empty.
double support_f1(const IndexSet& estimated, const IndexSet& truth);

}  // namespace adatrans
