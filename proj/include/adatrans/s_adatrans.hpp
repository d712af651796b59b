#pragma once

#include "adatrans/f_adatrans.hpp"
#include "adatrans/solvers.hpp"
#include "adatrans/types.hpp"

namespace adatrans {

struct ProblemDims {
  int p = 0;
  int n_t = 0;
  int n_s = 0;
  int k = 0;

  int n_total() const { return n_t + k * n_s; }
  int n_task(int task) const { return task == 0 ? n_t : n_s; }
  static ProblemDims of(const TransferProblem& problem);
};

/// Per-task weights w = (w_0, ..., w_K); normalized means
/// sum_k (n_k / N) w_k = 1.
struct SampleWeights {
  Vector w;
  bool normalized = false;

  int num_tasks() const { return static_cast<int>(w.size()); }
};

// Weights below this value after normalization are snapped to zero (and the
// rest rescaled); vanishing weights otherwise ill-condition the fit.
inline constexpr double kWeightFloor = 1e-3;

/// Rescales raw >= 0 (not all zero) so the normalization constraint holds.
SampleWeights normalize_weights(const Vector& raw, int n_t, int n_s);

struct SHyperparams {
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double lambda_t = 0.0;
  double c0 = 1.0;
  double c1 = 1.0;
  double lambda_w = 0.0;
  bool s_hat_floored = false;
};

/// Rate schedule given normalized weights and plug-in (s, h_k) estimates:
/// lambda0 = c0 [ kappa^{-1/2} (hbar^2 log p / (s^2 n_T))^{1/4} + sqrt(log p / N) ],
/// lambda1 = c0 (n_S/N) sqrt(log p / n_T), lambda_T = c1 sqrt(log p / n_T).
/// s_hat = 0 is substituted by 1 with a diagnostic flag.
SHyperparams lambda_schedule(const SampleWeights& weights, double s_hat, const Vector& h_hats,
                             const ProblemDims& dims, double c0, double c1);

/// Weighted transfer fit: (1/N) sum_k w_k ||y_k - X_k (beta+delta_k)||^2 with
/// beta penalized at lambda0 sqrt(sum n_k w_k^2 / N) and delta_k at
/// lambda1 w_k, subject to the target gradient constraint
/// ||X_0^T (y_0 - X_0 beta)||_inf / n_T <= lambda_T. Zero-weight sources are
/// dropped from the optimization with their contrasts fixed at zero. Weights
/// are normalized internally (the minimizer is invariant under positive
/// scaling), so the reported objective refers to the normalized weights.
Estimate fit_s_adatrans(const TransferProblem& problem, const SampleWeights& weights,
                        const SHyperparams& hp, const AdmmSettings& admm = {});

/// Closed-form bound-minimizing weights for a single source:
/// w_1 = max(s log p - (c_sigma/2) sqrt(n_T) h_1 sqrt(log p), 0) / (s log p),
/// w_0 = (N - n_S w_1) / n_T. Satisfies the normalization constraint; at
/// h_1 = 0 both weights equal 1 exactly.
SampleWeights optimal_weights_k1(double s, int p, int n_t, int n_s, double h1,
                                 double c_sigma = 1.0);

/// Data-driven weights: minimize sum_k a (w'_k)^2 + lambda_w sum_{k>=1} b_k w'_k
/// over the simplex, with a = s_hat log p / n_S and b_k = h_hat_k sqrt(log p / n_T).
/// Solved in closed form by water-filling; w'_0 maps to (N/n_T) w'_0 and the
/// source entries to (N/n_S) w'_k. With s_hat = 0 the quadratic vanishes and
/// all mass goes to the cheapest task, ties toward the target.
SampleWeights select_weights_qp(double s_hat, const Vector& h_hats, double lambda_w,
                                const ProblemDims& dims);
SampleWeights select_weights_qp(const Estimate& init, double lambda_w,
                                const ProblemDims& dims);

struct SDiagnostics {
  double kappa_s = 1.0;  // sum n_k w_k^2 / N; >= 1 for normalized weights
  double h_bar = 0.0;    // sum_{k>=1} n_k w_k h_k / N
};

SDiagnostics kappa_s_hbar(const SampleWeights& weights, const Vector& h_k,
                          const ProblemDims& dims);

struct SAdaConfig {
  std::vector<double> lambda_w_grid = log_spaced(0.05, 50.0, 8);
  std::vector<double> multiplier_grid = log_spaced(0.05, 5.0, 8);
  int cv_folds = 5;
  double c0 = 1.0;
  double c1 = 1.0;
  AdmmSettings admm;     // final fit
  AdmmSettings cv_admm;  // fold fits; loosened in the default constructor
  std::vector<double> init_scale_grid = default_scale_grid();

  SAdaConfig() {
    cv_admm.tol_primal = 1e-4;
    cv_admm.tol_dual = 1e-4;
    cv_admm.max_iter = 600;
    cv_admm.cd.tol = 1e-7;
  }
};

/// Mean held-out target prediction error per lambda_w candidate; returns the
/// argmin, ties to the smallest value. Folds split the target rows only,
/// round-robin, and the constraint radius is rescaled to the fold sample size.
double cv_lambda_w(const TransferProblem& problem, const Estimate& init,
                   const std::vector<double>& grid, int folds, const SAdaConfig& config = {});

struct SAdaFit {
  Estimate estimate;
  SampleWeights weights;
  SHyperparams hp;
  Estimate initial;
  double multiplier = 1.0;
};

/// Full data-driven pipeline: initial lasso fits, cross-validated lambda_w,
/// water-filling weights, and a jointly tuned multiplier on the rate schedule.
SAdaFit fit_s_adatrans_auto(const TransferProblem& problem, const SAdaConfig& config = {});

}  // namespace adatrans
