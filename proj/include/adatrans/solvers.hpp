#pragma once

#include "adatrans/types.hpp"

namespace adatrans {

struct CdSettings {
  double tol = 1e-8;      // max coordinate change per full sweep
  int max_iter = 10000;   // total sweep budget
  bool active_set = true;

  void validate() const;
};

struct CdResult {
  Vector theta;
  int sweeps = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  double objective = 0.0;
};

/// Minimizes (1/n_obj) * ||sqrt(W)(b - A theta)||^2 + sum_j pw_j |theta_j|
/// by cyclic coordinate descent (ascending index order, no randomization).
/// W = diag(sample_weights), identity when null. Coordinates with infinite
/// penalty weight are held at zero. Convergence requires the KKT residual to
/// drop below 10 * tol; otherwise the best iterate is returned flagged.
CdResult weighted_lasso_cd(const Matrix& A, const Vector& b, const Vector* sample_weights,
                           const Vector& penalty_weights, double n_obj,
                           const CdSettings& settings = {}, const Vector* warm_start = nullptr);

/// Max subgradient violation of the weighted lasso objective at theta:
/// |g_j + pw_j sign(theta_j)| on active coordinates, max(|g_j| - pw_j, 0) at
/// zeros, where g is the smooth-loss gradient.
double kkt_residual(const Matrix& A, const Vector& b, const Vector* sample_weights,
                    const Vector& penalty_weights, double n_obj, const Vector& theta);

/// Entrywise clip to [-radius, radius].
Vector project_linf(Vector u, double radius);

struct AdmmSettings {
  double rho = 1.0;  // fixed; not adapted, so runs are reproducible
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  int max_iter = 5000;
  CdSettings cd;             // used for the exact subproblem solve at the end
  int inner_sweeps = 8;      // inexact subproblem budget per iteration

  void validate() const;
};

struct AdmmResult {
  Vector theta;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double subproblem_kkt = 0.0;
  bool converged = false;
  double objective = 0.0;       // on the original (unaugmented) problem
  double constraint_gap = 0.0;  // max(0, ||c - M beta||_inf - radius)
};

/// Solves min (1/n_obj)||sqrt(W)(b - A theta)||^2 + sum_j pw_j |theta_j|
/// subject to ||c - M beta||_inf <= radius, where beta is the leading
/// `constrained_dim` block of theta. Splitting u = c - M beta: the u-update is
/// the closed-form box projection, the theta-update a weighted lasso on the
/// quadratically augmented system. An infinite radius reduces to one
/// unconstrained coordinate-descent solve.
AdmmResult admm_linf_constrained(const Matrix& A, const Vector& b, const Vector* sample_weights,
                                 double n_obj, const Vector& penalty_weights,
                                 int constrained_dim, const Matrix& M, const Vector& c,
                                 double radius, const AdmmSettings& settings = {});

}  // namespace adatrans
