#pragma once

#include "adatrans/penalty.hpp"
#include "adatrans/solvers.hpp"
#include "adatrans/types.hpp"

namespace adatrans {

/// Joint design for the fused-penalty fit, laid out as
/// [beta | delta_1 | ... | delta_K]: row-block 0 holds the target sample with
/// only the beta columns active, row-block k repeats X_k in the beta block and
/// in the k-th contrast block.
struct StackedDesign {
  Matrix A;  // N x (K+1) p
  Vector b;  // length N
  int p = 0;
  int num_sources = 0;

  int dim() const { return p * (1 + num_sources); }
  int beta_col(int j) const { return j; }
  int delta_col(int k, int j) const { return (k + 1) * p + j; }  // k in [0, K)

  Vector pack(const Vector& beta, const std::vector<Vector>& deltas) const;
  void unpack(const Vector& theta, Vector& beta, std::vector<Vector>& deltas) const;
};

StackedDesign stack_design(const TransferProblem& problem);

/// Indicator weights for a known transferable structure: w0_j = 1 off S0,
/// wk_j = 1 off S_k, zero elsewhere (supported coordinates go unpenalized).
FeatureWeights oracle_feature_weights(int p, const IndexSet& s0,
                                      const std::vector<IndexSet>& sk);

/// Penalty rates sized to the joint sample: lambda0 ~ sqrt(log p / N),
/// lambda1 ~ (n_S/N) sqrt(log p / n_S), times a caller-chosen scale.
double theorem_lambda0(int p, int n_total, double scale);
double theorem_lambda1(int p, int n_total, int n_source, double scale);

// Rate-constant used for the known-structure fits in the benchmark; large
// enough that noise correlations stay under the penalty at the tested sizes.
inline constexpr double kOracleWeightScale = 2.0;

/// Solves the fused-penalty problem: (1/N) sum_k ||y_k - X_k (beta+delta_k)||^2
/// + lambda0 sum_j w0_j |beta_j| + lambda1 sum_k sum_j wk_j |delta_k_j|.
Estimate fit_f_adatrans(const TransferProblem& problem, const FeatureWeights& weights,
                        double lambda0, double lambda1, const CdSettings& cd = {});

struct OracleOptions {
  bool pinv_fallback = true;   // smallest-norm solve past the condition limit
  double cond_limit = 1e12;
};

struct OracleDecomposition {
  std::vector<Matrix> projections;  // H_k, n_S x n_S, onto col(X_k[S_k])
  Matrix xtilde;                    // N x |S0|: target block, then (I-H_k) X_k[S0]
  bool used_pinv = false;
};

OracleDecomposition oracle_decomposition(const TransferProblem& problem, const IndexSet& s0,
                                         const std::vector<IndexSet>& sk,
                                         const OracleOptions& options = {});

/// Constrained least squares with known supports: beta zero off S0 and in
/// closed form on S0 via the filtered design, delta_k zero off S_k and a
/// residual regression on S_k. Requires |S0| < n_T and |S_k| < n_S.
Estimate fit_oracle(const TransferProblem& problem, const IndexSet& s0,
                    const std::vector<IndexSet>& sk, const OracleOptions& options = {});

/// Transferability ratio: sup-norm of the filtered-design noise projection
/// over that of the full-sample projection. Needs the true noise vector, so
/// synthetic instances only. ~1 when all sources are orthogonal-transferable,
/// ~sqrt(N/n_T) when S0 is contained in every S_k.
double kappa_f(const TransferProblem& problem, const IndexSet& s0,
               const std::vector<IndexSet>& sk, const Vector& noise);

/// Ten log-spaced points in [0.05, 5]; shared default for every CV grid.
std::vector<double> default_scale_grid();
std::vector<double> log_spaced(double lo, double hi, int n);

struct LassoCvResult {
  Vector coef;
  double scale = 1.0;   // selected multiplier on sqrt(log p / n)
  double lambda = 0.0;  // final penalty level
  CdResult fit;
};

/// Single-matrix lasso with the penalty sqrt(log p / n) scaled by a
/// cross-validated constant. Folds are assigned round-robin by row index, so
/// the split is deterministic.
LassoCvResult cv_lasso(const Matrix& X, const Vector& y, const std::vector<double>& scale_grid,
                       int folds, const CdSettings& cd = {});

/// Initial estimates for weight construction: target-only lasso for beta,
/// per-source lasso minus the target fit for each contrast.
Estimate fit_initial(const TransferProblem& problem,
                     const std::vector<double>& scale_grid = default_scale_grid(),
                     int folds = 5, const CdSettings& cd = {});

struct TargetFoldSplit {
  TransferProblem train;
  Matrix holdout_X;
  Vector holdout_y;
};

/// Round-robin split of the target rows; sources are kept whole in `train`.
TargetFoldSplit split_target_fold(const TransferProblem& problem, int fold, int folds);

struct FAdaConfig {
  PenaltyFamily family = PenaltyFamily::scad;
  double scad_a = 3.7;
  double mcp_gamma = 3.0;
  int lla_rounds = 1;  // refit -> reweight rounds, 1..3
  std::vector<double> scale_grid = default_scale_grid();
  int cv_folds = 5;
  CdSettings cd;
  CdSettings init_cd;
  CdSettings cv_cd;  // fold fits; loosened in the default constructor

  FAdaConfig() { cv_cd.tol = 1e-6; }
};

struct FAdaFit {
  Estimate estimate;
  FeatureWeights weights;
  double scale = 1.0;   // selected multiplier on the beta penalty rate
  double scale1 = 1.0;  // selected multiplier on the contrast penalty rate
  Estimate initial;
};

/// Full data-driven pipeline: initial lasso fits, folded-concave LLA weights,
/// fused-penalty fit, with the penalty scale chosen by cross-validation on
/// the target sample.
FAdaFit fit_f_adatrans_auto(const TransferProblem& problem, const FAdaConfig& config = {});

}  // namespace adatrans
