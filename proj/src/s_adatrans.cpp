#include "adatrans/s_adatrans.hpp"

#include "adatrans/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace adatrans {

ProblemDims ProblemDims::of(const TransferProblem& problem) {
  ProblemDims dims;
  dims.p = problem.p();
  dims.n_t = problem.n_target();
  dims.n_s = problem.n_source();
  dims.k = problem.num_sources();
  return dims;
}

namespace {

double weighted_row_sum(const Vector& w, int n_t, int n_s) {
  double sum = static_cast<double>(n_t) * w[0];
  for (int k = 1; k < w.size(); ++k) sum += static_cast<double>(n_s) * w[k];
  return sum;
}

// Snap sub-floor weights to zero and rescale the survivors so the
// normalization constraint keeps holding.
void apply_floor(Vector& w, int n_t, int n_s, double n_total) {
  bool any = false;
  for (int k = 0; k < w.size(); ++k)
    if (w[k] > 0.0 && w[k] < kWeightFloor) {
      w[k] = 0.0;
      any = true;
    }
  if (!any) return;
  const double sum = weighted_row_sum(w, n_t, n_s);
  if (sum <= 0.0) throw std::invalid_argument("sample weights: all weights below the floor");
  w *= n_total / sum;
}

}  // namespace

SampleWeights normalize_weights(const Vector& raw, int n_t, int n_s) {
  if (raw.size() < 1) throw std::invalid_argument("normalize_weights: empty weight vector");
  if (n_t < 1) throw std::invalid_argument("normalize_weights: n_t must be >= 1");
  if (raw.size() > 1 && n_s < 1)
    throw std::invalid_argument("normalize_weights: n_s must be >= 1 with sources present");
  for (int k = 0; k < raw.size(); ++k)
    if (!(raw[k] >= 0.0))
      throw std::invalid_argument("normalize_weights: weights must be >= 0");
  const double n_total = n_t + static_cast<double>(raw.size() - 1) * n_s;
  const double sum = weighted_row_sum(raw, n_t, n_s);
  if (sum <= 0.0) throw std::invalid_argument("normalize_weights: weights must not all be zero");
  SampleWeights out;
  out.w = raw * (n_total / sum);
  apply_floor(out.w, n_t, n_s, n_total);
  out.normalized = true;
  return out;
}

SHyperparams lambda_schedule(const SampleWeights& weights, double s_hat, const Vector& h_hats,
                             const ProblemDims& dims, double c0, double c1) {
  if (!weights.normalized)
    throw std::invalid_argument("lambda_schedule: weights must be normalized");
  if (weights.num_tasks() != dims.k + 1 || h_hats.size() != dims.k)
    throw std::invalid_argument("lambda_schedule: dimension mismatch");
  for (int k = 0; k < h_hats.size(); ++k)
    if (!(h_hats[k] >= 0.0)) throw std::invalid_argument("lambda_schedule: h_hats must be >= 0");

  SHyperparams hp;
  hp.c0 = c0;
  hp.c1 = c1;
  double s = s_hat;
  if (s <= 0.0) {
    s = 1.0;
    hp.s_hat_floored = true;
  }

  const double logp = std::log(static_cast<double>(dims.p));
  const double n = dims.n_total();
  const SDiagnostics diag = kappa_s_hbar(weights, h_hats, dims);
  const double bias_term =
      std::pow(diag.h_bar * diag.h_bar * logp / (s * s * dims.n_t), 0.25) /
      std::sqrt(diag.kappa_s);
  hp.lambda0 = c0 * (bias_term + std::sqrt(logp / n));
  hp.lambda1 =
      dims.k > 0 ? c0 * (dims.n_s / n) * std::sqrt(logp / dims.n_t) : 0.0;
  hp.lambda_t = c1 * std::sqrt(logp / dims.n_t);
  return hp;
}

SDiagnostics kappa_s_hbar(const SampleWeights& weights, const Vector& h_k,
                          const ProblemDims& dims) {
  if (!weights.normalized)
    throw std::invalid_argument("kappa_s_hbar: weights must be normalized");
  if (weights.num_tasks() != dims.k + 1 || h_k.size() != dims.k)
    throw std::invalid_argument("kappa_s_hbar: dimension mismatch");
  const double n = dims.n_total();
  SDiagnostics diag;
  diag.kappa_s = dims.n_t * weights.w[0] * weights.w[0] / n;
  diag.h_bar = 0.0;
  for (int k = 1; k <= dims.k; ++k) {
    diag.kappa_s += dims.n_s * weights.w[k] * weights.w[k] / n;
    diag.h_bar += dims.n_s * weights.w[k] * h_k[k - 1] / n;
  }
  return diag;
}

Estimate fit_s_adatrans(const TransferProblem& problem, const SampleWeights& weights,
                        const SHyperparams& hp, const AdmmSettings& admm) {
  problem.validate();
  if (weights.num_tasks() != problem.num_sources() + 1)
    throw std::invalid_argument("fit_s_adatrans: need one weight per task");
  // Normalizing here makes the fit exactly invariant under positive scaling
  // of the weights; the minimizer is unchanged and the ambiguity is removed.
  const SampleWeights wn = weights.normalized
                               ? weights
                               : normalize_weights(weights.w, problem.n_target(),
                                                   problem.n_source());

  const int p = problem.p();
  const int n_t = problem.n_target();
  const double n_total = problem.total_rows();

  std::vector<int> active;  // sources with positive weight keep their contrasts
  for (int k = 1; k < wn.w.size(); ++k)
    if (wn.w[k] > 0.0) active.push_back(k - 1);

  const int n_s = problem.n_source();
  const int rows = n_t + static_cast<int>(active.size()) * n_s;
  const int dim = p * (1 + static_cast<int>(active.size()));
  Matrix A = Matrix::Zero(rows, dim);
  Vector b(rows);
  Vector sw(rows);
  A.topLeftCorner(n_t, p) = problem.target_X;
  b.head(n_t) = problem.target_y;
  sw.head(n_t).setConstant(wn.w[0]);
  int at = n_t;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto& src = problem.sources[active[i]];
    A.block(at, 0, n_s, p) = src.X;
    A.block(at, (i + 1) * p, n_s, p) = src.X;
    b.segment(at, n_s) = src.y;
    sw.segment(at, n_s).setConstant(wn.w[active[i] + 1]);
    at += n_s;
  }

  double kappa = n_t * wn.w[0] * wn.w[0] / n_total;
  for (int k = 1; k < wn.w.size(); ++k) kappa += n_s * wn.w[k] * wn.w[k] / n_total;
  Vector pw(dim);
  pw.head(p).setConstant(hp.lambda0 * std::sqrt(kappa));
  for (std::size_t i = 0; i < active.size(); ++i)
    pw.segment((i + 1) * p, p).setConstant(hp.lambda1 * wn.w[active[i] + 1]);

  const Matrix M = problem.target_X.transpose() * problem.target_X / n_t;
  const Vector c = problem.target_X.transpose() * problem.target_y / n_t;

  const AdmmResult res = admm_linf_constrained(A, b, &sw, n_total, pw, p, M, c,
                                               hp.lambda_t, admm);

  Estimate est;
  est.beta_hat = res.theta.head(p);
  est.delta_hats.assign(problem.num_sources(), Vector::Zero(p));
  for (std::size_t i = 0; i < active.size(); ++i)
    est.delta_hats[active[i]] = res.theta.segment((i + 1) * p, p);
  est.iterations = res.iterations;
  est.kkt_residual = std::max({res.subproblem_kkt, res.primal_residual, res.dual_residual});
  est.objective_value = res.objective;
  est.converged = res.converged;
  est.constraint_gap = res.constraint_gap;
  return est;
}

SampleWeights optimal_weights_k1(double s, int p, int n_t, int n_s, double h1,
                                 double c_sigma) {
  if (s < 1 || p < 2 || n_t < 1 || n_s < 1)
    throw std::invalid_argument("optimal_weights_k1: need s >= 1, p >= 2, n_t, n_s >= 1");
  if (h1 < 0 || c_sigma <= 0)
    throw std::invalid_argument("optimal_weights_k1: need h1 >= 0 and c_sigma > 0");
  const double logp = std::log(static_cast<double>(p));
  const double slogp = s * logp;
  const double num = slogp - 0.5 * c_sigma * std::sqrt(static_cast<double>(n_t)) * h1 *
                                 std::sqrt(logp);
  const double n_total = n_t + n_s;
  // Arranged so h1 = 0 gives w = (1, 1) exactly and the normalization
  // constraint holds by construction.
  double w1 = std::max(num, 0.0) / slogp;
  if (w1 < kWeightFloor) w1 = 0.0;
  double w0 = (n_total - n_s * w1) / n_t;
  if (w0 < kWeightFloor) {
    w0 = 0.0;
    w1 = n_total / static_cast<double>(n_s);
  }
  SampleWeights out;
  out.w = Vector(2);
  out.w << w0, w1;
  out.normalized = true;
  return out;
}

SampleWeights select_weights_qp(double s_hat, const Vector& h_hats, double lambda_w,
                                const ProblemDims& dims) {
  if (dims.k != h_hats.size())
    throw std::invalid_argument("select_weights_qp: need one h_hat per source");
  if (lambda_w < 0) throw std::invalid_argument("select_weights_qp: lambda_w must be >= 0");
  if (s_hat < 0) throw std::invalid_argument("select_weights_qp: s_hat must be >= 0");
  const int m = dims.k + 1;
  const double logp = std::log(static_cast<double>(dims.p));
  const double a = s_hat * logp / dims.n_s;

  Vector cost(m);
  cost[0] = 0.0;
  for (int k = 1; k < m; ++k) cost[k] = lambda_w * h_hats[k - 1] * std::sqrt(logp / dims.n_t);

  Vector wp = Vector::Zero(m);
  if (a <= 0.0) {
    // Degenerate quadratic: all mass on the cheapest linear term, ties broken
    // toward the target (index 0 wins because costs are scanned in order).
    int best = 0;
    for (int k = 1; k < m; ++k)
      if (cost[k] < cost[best]) best = k;
    wp[best] = 1.0;
  } else {
    // Water-filling: w'_k = max(0, (nu - cost_k) / (2a)) with nu set by the
    // simplex constraint over the active prefix of the sorted costs.
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return cost[i] < cost[j]; });
    double running = 0.0;
    double nu = 0.0;
    int active = 0;
    for (int i = 0; i < m; ++i) {
      running += cost[order[i]];
      const double candidate = (2.0 * a + running) / (i + 1);
      if (candidate > cost[order[i]]) {
        nu = candidate;
        active = i + 1;
      }
    }
    for (int i = 0; i < active; ++i)
      wp[order[i]] = (nu - cost[order[i]]) / (2.0 * a);
  }

  Vector w(m);
  const double n_total = dims.n_total();
  w[0] = n_total / dims.n_t * wp[0];
  for (int k = 1; k < m; ++k) w[k] = n_total / dims.n_s * wp[k];
  apply_floor(w, dims.n_t, dims.n_s, n_total);
  SampleWeights out;
  out.w = std::move(w);
  out.normalized = true;
  return out;
}

SampleWeights select_weights_qp(const Estimate& init, double lambda_w,
                                const ProblemDims& dims) {
  const double s_hat = static_cast<double>(support_of(init.beta_hat).size());
  Vector h_hats(init.delta_hats.size());
  for (std::size_t k = 0; k < init.delta_hats.size(); ++k)
    h_hats[k] = init.delta_hats[k].lpNorm<1>();
  return select_weights_qp(s_hat, h_hats, lambda_w, dims);
}

namespace {

// Mean held-out target prediction error of the weighted fit across folds,
// with the constraint radius rescaled to the training sample size.
double cv_score(const TransferProblem& problem, const SampleWeights& weights,
                const SHyperparams& hp, int folds, const AdmmSettings& admm) {
  const double logp = std::log(static_cast<double>(problem.p()));
  double total = 0.0;
  for (int f = 0; f < folds; ++f) {
    const TargetFoldSplit split = split_target_fold(problem, f, folds);
    SHyperparams fold_hp = hp;
    fold_hp.lambda_t = hp.c1 * std::sqrt(logp / split.train.n_target());
    const Estimate fit = fit_s_adatrans(split.train, weights, fold_hp, admm);
    total += (split.holdout_y - split.holdout_X * fit.beta_hat).squaredNorm() /
             split.holdout_y.size();
  }
  return total / folds;
}

}  // namespace

double cv_lambda_w(const TransferProblem& problem, const Estimate& init,
                   const std::vector<double>& grid, int folds, const SAdaConfig& config) {
  if (grid.empty()) throw std::invalid_argument("cv_lambda_w: empty grid");
  folds = std::min(folds, problem.n_target());
  if (folds < 2) throw std::invalid_argument("cv_lambda_w: need at least 2 folds");
  if (grid.size() == 1) return grid[0];

  const ProblemDims dims = ProblemDims::of(problem);
  const double s_hat = static_cast<double>(support_of(init.beta_hat).size());
  Vector h_hats(init.delta_hats.size());
  for (std::size_t k = 0; k < init.delta_hats.size(); ++k)
    h_hats[k] = init.delta_hats[k].lpNorm<1>();

  std::vector<double> candidates = grid;
  std::sort(candidates.begin(), candidates.end());
  double best_value = candidates.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (double lw : candidates) {
    const SampleWeights w = select_weights_qp(s_hat, h_hats, lw, dims);
    const SHyperparams hp = lambda_schedule(w, s_hat, h_hats, dims, config.c0, config.c1);
    const double score = cv_score(problem, w, hp, folds, config.cv_admm);
    if (score < best_score) {
      best_score = score;
      best_value = lw;
    }
  }
  return best_value;
}

SAdaFit fit_s_adatrans_auto(const TransferProblem& problem, const SAdaConfig& config) {
  problem.validate();
  SAdaFit out;
  out.initial = fit_initial(problem, config.init_scale_grid, config.cv_folds);

  const ProblemDims dims = ProblemDims::of(problem);
  const double s_hat = static_cast<double>(support_of(out.initial.beta_hat).size());
  Vector h_hats(out.initial.delta_hats.size());
  for (std::size_t k = 0; k < out.initial.delta_hats.size(); ++k)
    h_hats[k] = out.initial.delta_hats[k].lpNorm<1>();

  const int folds = std::min(config.cv_folds, problem.n_target());
  double lambda_w = config.lambda_w_grid.empty() ? 0.0 : config.lambda_w_grid.front();
  if (dims.k > 0 && config.lambda_w_grid.size() > 1)
    lambda_w = cv_lambda_w(problem, out.initial, config.lambda_w_grid, folds, config);
  out.weights = dims.k > 0 ? select_weights_qp(s_hat, h_hats, lambda_w, dims)
                           : normalize_weights(Vector::Ones(1), dims.n_t, dims.n_s);

  // The three penalty levels keep their fixed relative sizes; only one scalar
  // multiplier on the schedule is tuned.
  double best_multiplier = 1.0;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> multipliers = config.multiplier_grid;
  std::sort(multipliers.begin(), multipliers.end());
  for (double m : multipliers) {
    const SHyperparams hp =
        lambda_schedule(out.weights, s_hat, h_hats, dims, m * config.c0, m * config.c1);
    const double score = cv_score(problem, out.weights, hp, folds, config.cv_admm);
    if (score < best_score) {
      best_score = score;
      best_multiplier = m;
    }
  }
  out.multiplier = best_multiplier;
  out.hp = lambda_schedule(out.weights, s_hat, h_hats, dims, best_multiplier * config.c0,
                           best_multiplier * config.c1);
  out.hp.lambda_w = lambda_w;
  out.estimate = fit_s_adatrans(problem, out.weights, out.hp, config.admm);
  return out;
}

}  // namespace adatrans
