#include "adatrans/solvers.hpp"

#include "adatrans/kernels.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace adatrans {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

// Coordinate-descent core on a pre-scaled system: minimizes
// (1/n) ||y - B theta||^2 + sum_j pw_j |theta_j|. Callers fold sample weights
// into B and y (rows scaled by sqrt(w_i)). Keeps theta and the residual
// y - B theta alive between calls so ADMM subproblems stay warm.
class CdCore {
 public:
  CdCore(Matrix B, Vector y, Vector pw, double n_obj)
      : B_(std::move(B)),
        y_(std::move(y)),
        pw_(std::move(pw)),
        n_(n_obj),
        d_(static_cast<int>(B_.cols())),
        theta_(Vector::Zero(B_.cols())),
        fixed_(B_.cols(), 0) {
    curv_ = kernels::col_sq_norms(B_) * (2.0 / n_);
    for (int j = 0; j < d_; ++j)
      if (curv_[j] == 0.0 || std::isinf(pw_[j])) fixed_[j] = 1;
    refresh_residual();
    rebuild_active();
  }

  void set_theta(const Vector& theta) {
    theta_ = theta;
    for (int j = 0; j < d_; ++j)
      if (fixed_[j]) theta_[j] = 0.0;
    refresh_residual();
    rebuild_active();
  }

  // Replaces the trailing rows of y. Only the first `cols` columns of B are
  // nonzero in those rows, which keeps the residual patch at O(m * cols).
  void update_tail(const Vector& tail, int cols) {
    const int m = static_cast<int>(tail.size());
    y_.tail(m) = tail;
    r_.tail(m) = tail - kernels::matvec(B_.bottomRows(m).leftCols(cols), theta_.head(cols));
  }

  double sweep(bool active_only) {
#ifndef NDEBUG
    const double before = objective();
#endif
    double max_chg = 0.0;
    if (active_only) {
      for (int j : active_) coordinate_step(j, max_chg);
    } else {
      for (int j = 0; j < d_; ++j) coordinate_step(j, max_chg);
    }
#ifndef NDEBUG
    assert(objective() <= before + 1e-10 * (1.0 + std::abs(before)));
#endif
    return max_chg;
  }

  // Inexact solve: full sweep, then active-set sweeps, stopping at `tol`
  // coordinate change or after `max_sweeps`. No KKT verification.
  int run_sweeps(double tol, int max_sweeps) {
    int sweeps = 0;
    while (sweeps < max_sweeps) {
      const double chg = sweep(sweeps > 0);
      ++sweeps;
      if (chg <= tol) break;
    }
    return sweeps;
  }

  // Full solve with KKT verification at stationarity.
  int run(const CdSettings& s) {
    const double kkt_tol = 10.0 * s.tol;
    converged_ = false;
    int sweeps = 0;
    rebuild_active();
    while (sweeps < s.max_iter) {
      double chg = sweep(false);
      ++sweeps;
      if (s.active_set) {
        double achg = chg;
        while (achg > s.tol && sweeps < s.max_iter) {
          achg = sweep(true);
          ++sweeps;
        }
        chg = sweep(false);  // verification pass over all coordinates
        ++sweeps;
      }
      if (chg <= s.tol) {
        refresh_residual();
        kkt_ = compute_kkt();
        if (kkt_ <= kkt_tol) {
          converged_ = true;
          break;
        }
        if (chg == 0.0) break;  // exact fixpoint of the sweep map
      }
      rebuild_active();
    }
    if (!converged_) {
      refresh_residual();
      kkt_ = compute_kkt();
      converged_ = kkt_ <= kkt_tol;
    }
    return sweeps;
  }

  void refresh_residual() { r_ = y_ - kernels::matvec(B_, theta_); }

  double compute_kkt() const {
    const Vector corr = kernels::tmatvec(B_, r_) * (2.0 / n_);
    double worst = 0.0;
    for (int j = 0; j < d_; ++j) {
      if (fixed_[j]) continue;
      double viol;
      if (theta_[j] != 0.0)
        viol = std::abs(corr[j] - pw_[j] * (theta_[j] > 0 ? 1.0 : -1.0));
      else
        viol = std::max(std::abs(corr[j]) - pw_[j], 0.0);
      worst = std::max(worst, viol);
    }
    return worst;
  }

  double objective() const {
    double pen = 0.0;
    for (int j = 0; j < d_; ++j)
      if (theta_[j] != 0.0) pen += pw_[j] * std::abs(theta_[j]);
    return r_.squaredNorm() / n_ + pen;
  }

  const Vector& theta() const { return theta_; }
  double kkt() const { return kkt_; }
  bool converged() const { return converged_; }

 private:
  void coordinate_step(int j, double& max_chg) {
    if (fixed_[j]) return;
    const double old = theta_[j];
    const double z = (2.0 / n_) * B_.col(j).dot(r_) + curv_[j] * old;
    const double neu = soft_threshold(z, pw_[j]) / curv_[j];
    const double diff = neu - old;
    if (diff != 0.0) {
      r_ -= diff * B_.col(j);
      theta_[j] = neu;
      if (neu != 0.0 && !in_active_[j]) {
        in_active_[j] = 1;
        active_.push_back(j);
      }
    }
    max_chg = std::max(max_chg, std::abs(diff));
  }

  void rebuild_active() {
    active_.clear();
    in_active_.assign(d_, 0);
    for (int j = 0; j < d_; ++j) {
      if (fixed_[j]) continue;
      if (theta_[j] != 0.0 || pw_[j] == 0.0) {
        active_.push_back(j);
        in_active_[j] = 1;
      }
    }
  }

  Matrix B_;
  Vector y_;
  Vector pw_;
  double n_;
  int d_;
  Vector theta_, r_, curv_;
  std::vector<char> fixed_;
  std::vector<int> active_;
  std::vector<char> in_active_;
  double kkt_ = kInf;
  bool converged_ = false;
};

void check_lasso_inputs(const Matrix& A, const Vector& b, const Vector* sw,
                        const Vector& pw, double n_obj) {
  if (b.size() != A.rows())
    throw std::invalid_argument("weighted_lasso_cd: b length != A rows");
  if (pw.size() != A.cols())
    throw std::invalid_argument("weighted_lasso_cd: penalty_weights length != A cols");
  if (sw && sw->size() != A.rows())
    throw std::invalid_argument("weighted_lasso_cd: sample_weights length != A rows");
  if (!(n_obj > 0.0)) throw std::invalid_argument("weighted_lasso_cd: n_obj must be > 0");
  if (!A.allFinite() || !b.allFinite())
    throw std::invalid_argument("weighted_lasso_cd: non-finite entries in A or b");
  if (sw && !sw->allFinite())
    throw std::invalid_argument("weighted_lasso_cd: non-finite sample weights");
  for (int j = 0; j < pw.size(); ++j)
    if (std::isnan(pw[j]) || pw[j] < 0.0)
      throw std::invalid_argument("weighted_lasso_cd: penalty weights must be >= 0");
  if (sw)
    for (int i = 0; i < sw->size(); ++i)
      if ((*sw)[i] < 0.0)
        throw std::invalid_argument("weighted_lasso_cd: sample weights must be >= 0");
}

// Fold sample weights into the system: rows scaled by sqrt(w_i).
void scale_rows(Matrix& B, Vector& y, const Vector* sw) {
  if (!sw) return;
  for (int i = 0; i < B.rows(); ++i) {
    const double s = std::sqrt((*sw)[i]);
    B.row(i) *= s;
    y[i] *= s;
  }
}

}  // namespace

void CdSettings::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("CdSettings: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("CdSettings: max_iter must be >= 1");
}

void AdmmSettings::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("AdmmSettings: rho must be > 0");
  if (!(tol_primal > 0.0) || !(tol_dual > 0.0))
    throw std::invalid_argument("AdmmSettings: tolerances must be > 0");
  if (max_iter < 1) throw std::invalid_argument("AdmmSettings: max_iter must be >= 1");
  cd.validate();
}

CdResult weighted_lasso_cd(const Matrix& A, const Vector& b, const Vector* sample_weights,
                           const Vector& penalty_weights, double n_obj,
                           const CdSettings& settings, const Vector* warm_start) {
  settings.validate();
  check_lasso_inputs(A, b, sample_weights, penalty_weights, n_obj);
  Matrix B = A;
  Vector y = b;
  scale_rows(B, y, sample_weights);
  CdCore core(std::move(B), std::move(y), penalty_weights, n_obj);
  if (warm_start) {
    if (warm_start->size() != A.cols())
      throw std::invalid_argument("weighted_lasso_cd: warm start length != A cols");
    core.set_theta(*warm_start);
  }
  CdResult result;
  result.sweeps = core.run(settings);
  result.theta = core.theta();
  result.kkt_residual = core.kkt();
  result.converged = core.converged();
  result.objective = core.objective();
  return result;
}

double kkt_residual(const Matrix& A, const Vector& b, const Vector* sample_weights,
                    const Vector& penalty_weights, double n_obj, const Vector& theta) {
  check_lasso_inputs(A, b, sample_weights, penalty_weights, n_obj);
  if (theta.size() != A.cols())
    throw std::invalid_argument("kkt_residual: theta length != A cols");
  Vector r = b - kernels::matvec(A, theta);
  if (sample_weights) r = r.cwiseProduct(*sample_weights);
  const Vector corr = kernels::tmatvec(A, r) * (2.0 / n_obj);
  double worst = 0.0;
  for (int j = 0; j < theta.size(); ++j) {
    if (std::isinf(penalty_weights[j])) continue;
    double viol;
    if (theta[j] != 0.0)
      viol = std::abs(corr[j] - penalty_weights[j] * (theta[j] > 0 ? 1.0 : -1.0));
    else
      viol = std::max(std::abs(corr[j]) - penalty_weights[j], 0.0);
    worst = std::max(worst, viol);
  }
  return worst;
}

Vector project_linf(Vector u, double radius) {
  if (std::isnan(radius) || radius < 0.0)
    throw std::invalid_argument("project_linf: radius must be >= 0");
  if (std::isinf(radius)) return u;
  for (int i = 0; i < u.size(); ++i) u[i] = std::clamp(u[i], -radius, radius);
  return u;
}

AdmmResult admm_linf_constrained(const Matrix& A, const Vector& b, const Vector* sample_weights,
                                 double n_obj, const Vector& penalty_weights,
                                 int constrained_dim, const Matrix& M, const Vector& c,
                                 double radius, const AdmmSettings& settings) {
  settings.validate();
  check_lasso_inputs(A, b, sample_weights, penalty_weights, n_obj);
  const int p = constrained_dim;
  if (M.rows() != M.cols() || M.rows() != p || c.size() != p)
    throw std::invalid_argument("admm_linf_constrained: M must be p x p and c length p");
  if (p > A.cols())
    throw std::invalid_argument("admm_linf_constrained: constrained_dim exceeds A cols");
  if (std::isnan(radius) || radius < 0.0)
    throw std::invalid_argument("admm_linf_constrained: radius must be >= 0");

  AdmmResult result;

  auto original_objective = [&](const Vector& theta) {
    Vector r = b - kernels::matvec(A, theta);
    double loss;
    if (sample_weights)
      loss = r.cwiseProduct(*sample_weights).dot(r) / n_obj;
    else
      loss = r.squaredNorm() / n_obj;
    double pen = 0.0;
    for (int j = 0; j < theta.size(); ++j)
      if (theta[j] != 0.0) pen += penalty_weights[j] * std::abs(theta[j]);
    return loss + pen;
  };

  if (std::isinf(radius)) {
    // The constraint can never bind; one unconstrained solve suffices.
    CdResult cd = weighted_lasso_cd(A, b, sample_weights, penalty_weights, n_obj, settings.cd);
    result.theta = std::move(cd.theta);
    result.iterations = cd.sweeps;
    result.subproblem_kkt = cd.kkt_residual;
    result.converged = cd.converged;
    result.objective = cd.objective;
    result.constraint_gap = 0.0;
    return result;
  }

  const int n_rows = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  const double tail_scale = std::sqrt(n_obj * settings.rho / 2.0);

  // Augmented system: original rows (weight-scaled), then rows tail_scale * M
  // acting on the beta block. With these weights the appended quadratic equals
  // (rho/2) ||v - M beta||^2 in the (1/n_obj)-scaled objective.
  Matrix B(n_rows + p, d);
  Vector y(n_rows + p);
  {
    Matrix top = A;
    Vector top_y = b;
    scale_rows(top, top_y, sample_weights);
    B.topRows(n_rows) = top;
    y.head(n_rows) = top_y;
  }
  B.bottomRows(p).setZero();
  B.bottomLeftCorner(p, p) = tail_scale * M;
  y.tail(p).setZero();

  CdCore core(std::move(B), std::move(y), penalty_weights, n_obj);

  Vector beta = Vector::Zero(p);
  Vector u = project_linf(c, radius);
  Vector dual = Vector::Zero(p);

  double primal = kInf, dual_res = kInf;
  bool converged = false;
  int iter = 0;
  while (iter < settings.max_iter) {
    ++iter;
    const Vector v = c - u - dual;
    core.update_tail(tail_scale * v, p);
    core.run_sweeps(settings.cd.tol, settings.inner_sweeps);
    beta = core.theta().head(p);

    const Vector Mb = kernels::matvec(M, beta);
    const Vector u_old = u;
    u = project_linf(c - Mb - dual, radius);
    const Vector gap = Mb + u - c;
    primal = gap.lpNorm<Eigen::Infinity>();
    dual_res = settings.rho * kernels::tmatvec(M, u - u_old).lpNorm<Eigen::Infinity>();
    dual += gap;

    if (primal <= settings.tol_primal && dual_res <= settings.tol_dual) {
      // Exact subproblem solve at the converged multipliers.
      core.update_tail(tail_scale * (c - u - dual), p);
      core.run(settings.cd);
      beta = core.theta().head(p);
      const Vector Mb2 = kernels::matvec(M, beta);
      primal = (Mb2 + u - c).lpNorm<Eigen::Infinity>();
      const double feas = (c - Mb2).lpNorm<Eigen::Infinity>() - radius;
      if (primal <= 10.0 * settings.tol_primal && feas <= 10.0 * settings.tol_primal) {
        converged = core.converged();
        break;
      }
    }
  }
  if (!converged && iter >= settings.max_iter) {
    core.run(settings.cd);  // best-effort polish before returning the iterate
    beta = core.theta().head(p);
  }

  result.theta = core.theta();
  result.iterations = iter;
  result.primal_residual = primal;
  result.dual_residual = dual_res;
  result.subproblem_kkt = core.kkt();
  result.converged = converged;
  result.objective = original_objective(result.theta);
  const double reach = (c - kernels::matvec(M, beta)).lpNorm<Eigen::Infinity>();
  result.constraint_gap = std::max(0.0, reach - radius);
  return result;
}

}  // namespace adatrans
