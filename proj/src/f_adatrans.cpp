#include "adatrans/f_adatrans.hpp"

#include "adatrans/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adatrans {

namespace {

Matrix columns(const Matrix& X, const IndexSet& idx) {
  Matrix out(X.rows(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(i) = X.col(idx[i]);
  return out;
}

void check_index_set(const IndexSet& s, int p, const std::string& name) {
  int prev = -1;
  for (int j : s) {
    if (j < 0 || j >= p) throw std::invalid_argument(name + ": index out of range");
    if (j <= prev) throw std::invalid_argument(name + ": indices must be strictly increasing");
    prev = j;
  }
}

// Symmetric solve with a condition-number guard. Falls back to the
// smallest-norm solution (eigenvalue cutoff at max/cond_limit) when allowed,
// otherwise throws naming the offending block.
Matrix guarded_solve(const Matrix& gram, const Matrix& rhs, const OracleOptions& options,
                     bool* used_pinv, const std::string& block) {
  if (gram.rows() == 0) return Matrix::Zero(0, rhs.cols());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& ev = eig.eigenvalues();
  const double hi = ev.maxCoeff();
  const double lo = ev.minCoeff();
  const bool singular = !(hi > 0.0) || lo <= hi / options.cond_limit;
  if (singular && !options.pinv_fallback)
    throw std::runtime_error("fit_oracle: singular Gram matrix for " + block);
  Vector inv(ev.size());
  const double cutoff = hi > 0.0 ? hi / options.cond_limit : 0.0;
  for (int i = 0; i < ev.size(); ++i) inv[i] = ev[i] > cutoff ? 1.0 / ev[i] : 0.0;
  if (singular && used_pinv) *used_pinv = true;
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * rhs;
}

Vector concatenated_response(const TransferProblem& problem) {
  Vector y(problem.total_rows());
  y.head(problem.n_target()) = problem.target_y;
  int at = problem.n_target();
  for (const auto& s : problem.sources) {
    y.segment(at, s.y.size()) = s.y;
    at += static_cast<int>(s.y.size());
  }
  return y;
}

}  // namespace

Vector StackedDesign::pack(const Vector& beta, const std::vector<Vector>& deltas) const {
  Vector theta = Vector::Zero(dim());
  theta.head(p) = beta;
  for (int k = 0; k < num_sources; ++k) theta.segment((k + 1) * p, p) = deltas[k];
  return theta;
}

void StackedDesign::unpack(const Vector& theta, Vector& beta,
                           std::vector<Vector>& deltas) const {
  beta = theta.head(p);
  deltas.clear();
  for (int k = 0; k < num_sources; ++k) deltas.push_back(theta.segment((k + 1) * p, p));
}

StackedDesign stack_design(const TransferProblem& problem) {
  problem.validate();
  StackedDesign sd;
  sd.p = problem.p();
  sd.num_sources = problem.num_sources();
  sd.A = Matrix::Zero(problem.total_rows(), sd.dim());
  sd.b = concatenated_response(problem);
  sd.A.topLeftCorner(problem.n_target(), sd.p) = problem.target_X;
  int at = problem.n_target();
  for (int k = 0; k < sd.num_sources; ++k) {
    const Matrix& X = problem.sources[k].X;
    sd.A.block(at, 0, X.rows(), sd.p) = X;
    sd.A.block(at, (k + 1) * sd.p, X.rows(), sd.p) = X;
    at += static_cast<int>(X.rows());
  }
  return sd;
}

FeatureWeights oracle_feature_weights(int p, const IndexSet& s0,
                                      const std::vector<IndexSet>& sk) {
  check_index_set(s0, p, "oracle_feature_weights: S0");
  FeatureWeights w;
  w.w0 = Vector::Ones(p);
  for (int j : s0) w.w0[j] = 0.0;
  for (const IndexSet& s : sk) {
    check_index_set(s, p, "oracle_feature_weights: S_k");
    Vector wk = Vector::Ones(p);
    for (int j : s) wk[j] = 0.0;
    w.wk.push_back(std::move(wk));
  }
  return w;
}

double theorem_lambda0(int p, int n_total, double scale) {
  return scale * std::sqrt(std::log(static_cast<double>(p)) / n_total);
}

double theorem_lambda1(int p, int n_total, int n_source, double scale) {
  if (n_source <= 0) return 0.0;
  return scale * (static_cast<double>(n_source) / n_total) *
         std::sqrt(std::log(static_cast<double>(p)) / n_source);
}

namespace {

Vector penalty_vector(const StackedDesign& sd, const FeatureWeights& weights,
                      double lambda0, double lambda1) {
  if (weights.w0.size() != sd.p ||
      static_cast<int>(weights.wk.size()) != sd.num_sources)
    throw std::invalid_argument("fit_f_adatrans: weight dimensions do not match problem");
  Vector pw(sd.dim());
  pw.head(sd.p) = lambda0 * weights.w0;
  for (int k = 0; k < sd.num_sources; ++k) {
    if (weights.wk[k].size() != sd.p)
      throw std::invalid_argument("fit_f_adatrans: weight dimensions do not match problem");
    pw.segment((k + 1) * sd.p, sd.p) = lambda1 * weights.wk[k];
  }
  return pw;
}

Estimate estimate_from_cd(const StackedDesign& sd, const CdResult& cd) {
  Estimate est;
  sd.unpack(cd.theta, est.beta_hat, est.delta_hats);
  est.iterations = cd.sweeps;
  est.kkt_residual = cd.kkt_residual;
  est.objective_value = cd.objective;
  est.converged = cd.converged;
  return est;
}

}  // namespace

Estimate fit_f_adatrans(const TransferProblem& problem, const FeatureWeights& weights,
                        double lambda0, double lambda1, const CdSettings& cd) {
  const StackedDesign sd = stack_design(problem);
  const Vector pw = penalty_vector(sd, weights, lambda0, lambda1);
  const CdResult result =
      weighted_lasso_cd(sd.A, sd.b, nullptr, pw, problem.total_rows(), cd);
  return estimate_from_cd(sd, result);
}

OracleDecomposition oracle_decomposition(const TransferProblem& problem, const IndexSet& s0,
                                         const std::vector<IndexSet>& sk,
                                         const OracleOptions& options) {
  problem.validate();
  if (static_cast<int>(sk.size()) != problem.num_sources())
    throw std::invalid_argument("oracle_decomposition: need one S_k per source");
  check_index_set(s0, problem.p(), "oracle_decomposition: S0");

  OracleDecomposition dec;
  dec.xtilde.resize(problem.total_rows(), s0.size());
  dec.xtilde.topRows(problem.n_target()) = columns(problem.target_X, s0);
  int at = problem.n_target();
  for (int k = 0; k < problem.num_sources(); ++k) {
    check_index_set(sk[k], problem.p(), "oracle_decomposition: S_k");
    const Matrix& X = problem.sources[k].X;
    const int n = static_cast<int>(X.rows());
    Matrix H = Matrix::Zero(n, n);
    if (!sk[k].empty()) {
      const Matrix G = columns(X, sk[k]);
      const Matrix coef = guarded_solve(G.transpose() * G, G.transpose(), options,
                                        &dec.used_pinv,
                                        "source " + std::to_string(k + 1) + " S_k block");
      H = G * coef;
    }
    dec.projections.push_back(H);
    const Matrix Xs0 = columns(X, s0);
    dec.xtilde.middleRows(at, n) = Xs0 - dec.projections.back() * Xs0;
    at += n;
  }
  return dec;
}

Estimate fit_oracle(const TransferProblem& problem, const IndexSet& s0,
                    const std::vector<IndexSet>& sk, const OracleOptions& options) {
  problem.validate();
  if (static_cast<int>(s0.size()) >= problem.n_target())
    throw std::invalid_argument("fit_oracle: requires |S0| < n_T");
  for (const IndexSet& s : sk)
    if (static_cast<int>(s.size()) >= problem.n_source())
      throw std::invalid_argument("fit_oracle: requires |S_k| < n_S");

  OracleDecomposition dec = oracle_decomposition(problem, s0, sk, options);
  Estimate est;
  est.beta_hat = Vector::Zero(problem.p());
  if (!s0.empty()) {
    const Vector y = concatenated_response(problem);
    const Vector beta_s0 =
        guarded_solve(dec.xtilde.transpose() * dec.xtilde, dec.xtilde.transpose() * y,
                      options, &est.used_pinv_fallback, "Xtilde_S0 block");
    for (std::size_t i = 0; i < s0.size(); ++i) est.beta_hat[s0[i]] = beta_s0[i];
  }
  est.used_pinv_fallback = est.used_pinv_fallback || dec.used_pinv;

  // Given beta, each contrast is the least-squares fit of the source residual
  // on its own support.
  double kkt = 0.0;
  const Vector r0 = problem.target_y - problem.target_X * est.beta_hat;
  double rss = r0.squaredNorm();
  Vector grad_beta = Vector::Zero(s0.size());
  if (!s0.empty()) grad_beta = columns(problem.target_X, s0).transpose() * r0;
  for (int k = 0; k < problem.num_sources(); ++k) {
    const Matrix& X = problem.sources[k].X;
    const Vector r = problem.sources[k].y - X * est.beta_hat;
    Vector delta = Vector::Zero(problem.p());
    if (!sk[k].empty()) {
      const Matrix G = columns(X, sk[k]);
      const Vector coef = guarded_solve(G.transpose() * G, G.transpose() * r, options,
                                        &est.used_pinv_fallback,
                                        "source " + std::to_string(k + 1) + " S_k block");
      for (std::size_t i = 0; i < sk[k].size(); ++i) delta[sk[k][i]] = coef[i];
    }
    const Vector res = r - X * delta;
    rss += res.squaredNorm();
    if (!s0.empty()) grad_beta += columns(X, s0).transpose() * res;
    if (!sk[k].empty()) {
      const double g = (columns(X, sk[k]).transpose() * res).lpNorm<Eigen::Infinity>();
      kkt = std::max(kkt, 2.0 * g / problem.total_rows());
    }
    est.delta_hats.push_back(std::move(delta));
  }
  if (!s0.empty())
    kkt = std::max(kkt, 2.0 * grad_beta.lpNorm<Eigen::Infinity>() / problem.total_rows());

  est.iterations = 0;
  est.kkt_residual = kkt;
  est.objective_value = rss / problem.total_rows();
  est.converged = true;
  return est;
}

double kappa_f(const TransferProblem& problem, const IndexSet& s0,
               const std::vector<IndexSet>& sk, const Vector& noise) {
  problem.validate();
  if (noise.size() != problem.total_rows())
    throw std::invalid_argument("kappa_f: noise length must equal N");
  if (s0.empty()) throw std::invalid_argument("kappa_f: S0 must be nonempty");

  const OracleOptions options;
  const OracleDecomposition dec = oracle_decomposition(problem, s0, sk, options);
  const Vector num_coef =
      guarded_solve(dec.xtilde.transpose() * dec.xtilde, dec.xtilde.transpose() * noise,
                    options, nullptr, "Xtilde_S0 block");

  Matrix full(problem.total_rows(), s0.size());
  full.topRows(problem.n_target()) = columns(problem.target_X, s0);
  int at = problem.n_target();
  for (const auto& src : problem.sources) {
    full.middleRows(at, src.X.rows()) = columns(src.X, s0);
    at += static_cast<int>(src.X.rows());
  }
  const Vector den_coef = guarded_solve(full.transpose() * full, full.transpose() * noise,
                                        options, nullptr, "full-sample S0 block");
  const double den = den_coef.lpNorm<Eigen::Infinity>();
  if (den == 0.0) throw std::invalid_argument("kappa_f: denominator is zero, ratio undefined");
  return num_coef.lpNorm<Eigen::Infinity>() / den;
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> grid;
  if (n == 1) {
    grid.push_back(lo);
    return grid;
  }
  const double step = (std::log(hi) - std::log(lo)) / (n - 1);
  for (int i = 0; i < n; ++i) grid.push_back(std::exp(std::log(lo) + i * step));
  return grid;
}

std::vector<double> default_scale_grid() { return log_spaced(0.05, 5.0, 10); }

namespace {

struct FoldRows {
  std::vector<int> train;
  std::vector<int> test;
};

FoldRows fold_rows(int n, int fold, int folds) {
  FoldRows out;
  for (int i = 0; i < n; ++i)
    ((i % folds == fold) ? out.test : out.train).push_back(i);
  return out;
}

Matrix take_rows(const Matrix& X, const std::vector<int>& rows) {
  Matrix out(rows.size(), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = X.row(rows[i]);
  return out;
}

Vector take_rows(const Vector& y, const std::vector<int>& rows) {
  Vector out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
  return out;
}

}  // namespace

LassoCvResult cv_lasso(const Matrix& X, const Vector& y, const std::vector<double>& scale_grid,
                       int folds, const CdSettings& cd) {
  if (scale_grid.empty()) throw std::invalid_argument("cv_lasso: empty scale grid");
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  folds = std::min(folds, n);
  if (folds < 2) throw std::invalid_argument("cv_lasso: need at least 2 folds");

  // Largest penalty first so warm starts walk down the path.
  std::vector<double> grid = scale_grid;
  std::sort(grid.begin(), grid.end(), std::greater<>());

  std::vector<double> score(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    const FoldRows rows = fold_rows(n, f, folds);
    const Matrix Xtr = take_rows(X, rows.train);
    const Vector ytr = take_rows(y, rows.train);
    const Matrix Xte = take_rows(X, rows.test);
    const Vector yte = take_rows(y, rows.test);
    const double rate = std::sqrt(std::log(static_cast<double>(p)) / rows.train.size());
    Vector warm = Vector::Zero(p);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const Vector pw = Vector::Constant(p, grid[g] * rate);
      const CdResult fit = weighted_lasso_cd(Xtr, ytr, nullptr, pw,
                                             static_cast<double>(rows.train.size()), cd, &warm);
      warm = fit.theta;
      score[g] += (yte - Xte * fit.theta).squaredNorm() / rows.test.size();
    }
  }

  std::size_t best = 0;
  double best_scale = grid[0];
  for (std::size_t g = 1; g < grid.size(); ++g) {
    // Strict improvement required; on ties the smaller scale wins, and the
    // grid is descending, so later (smaller) candidates win ties too.
    if (score[g] <= score[best]) {
      best = g;
      best_scale = grid[g];
    }
  }

  LassoCvResult out;
  out.scale = best_scale;
  out.lambda = best_scale * std::sqrt(std::log(static_cast<double>(p)) / n);
  const Vector pw = Vector::Constant(p, out.lambda);
  out.fit = weighted_lasso_cd(X, y, nullptr, pw, static_cast<double>(n), cd);
  out.coef = out.fit.theta;
  return out;
}

Estimate fit_initial(const TransferProblem& problem, const std::vector<double>& scale_grid,
                     int folds, const CdSettings& cd) {
  problem.validate();
  Estimate est;
  const LassoCvResult target = cv_lasso(problem.target_X, problem.target_y, scale_grid,
                                        folds, cd);
  est.beta_hat = target.coef;
  est.iterations = target.fit.sweeps;
  est.kkt_residual = target.fit.kkt_residual;
  est.converged = target.fit.converged;
  est.objective_value = target.fit.objective;
  for (const auto& src : problem.sources) {
    const LassoCvResult w = cv_lasso(src.X, src.y, scale_grid, folds, cd);
    est.delta_hats.push_back(w.coef - target.coef);
    est.iterations += w.fit.sweeps;
    est.kkt_residual = std::max(est.kkt_residual, w.fit.kkt_residual);
    est.converged = est.converged && w.fit.converged;
  }
  return est;
}

TargetFoldSplit split_target_fold(const TransferProblem& problem, int fold, int folds) {
  if (folds < 2 || fold < 0 || fold >= folds)
    throw std::invalid_argument("split_target_fold: bad fold arguments");
  const FoldRows rows = fold_rows(problem.n_target(), fold, folds);
  TargetFoldSplit out;
  out.train.target_X = take_rows(problem.target_X, rows.train);
  out.train.target_y = take_rows(problem.target_y, rows.train);
  out.train.sources = problem.sources;
  out.holdout_X = take_rows(problem.target_X, rows.test);
  out.holdout_y = take_rows(problem.target_y, rows.test);
  return out;
}

namespace {

// LLA rounds at fixed penalty levels: linearize at the current estimate,
// refit, repeat. Returns the last fit and leaves the final weights behind.
// `warm` threads the stacked iterate through consecutive calls.
Estimate lla_rounds_fit(double n_obj, const StackedDesign& sd, const Estimate& init,
                        double l0, double l1, const FAdaConfig& config, const CdSettings& cd,
                        Vector* warm, FeatureWeights* weights_out) {
  Estimate current = init;
  FeatureWeights weights;
  for (int round = 0; round < config.lla_rounds; ++round) {
    weights = lla_feature_weights(current, l0, l1, config.family, config.scad_a,
                                  config.mcp_gamma);
    const Vector pw = penalty_vector(sd, weights, l0, l1);
    const CdResult fit = weighted_lasso_cd(sd.A, sd.b, nullptr, pw, n_obj, cd, warm);
    if (warm) *warm = fit.theta;
    current = estimate_from_cd(sd, fit);
  }
  if (weights_out) *weights_out = std::move(weights);
  return current;
}

}  // namespace

FAdaFit fit_f_adatrans_auto(const TransferProblem& problem, const FAdaConfig& config) {
  problem.validate();
  if (config.lla_rounds < 1 || config.lla_rounds > 3)
    throw std::invalid_argument("fit_f_adatrans_auto: lla_rounds must be in 1..3");
  if (config.scale_grid.empty())
    throw std::invalid_argument("fit_f_adatrans_auto: empty scale grid");

  const int p = problem.p();
  const double l0_base = theorem_lambda0(p, problem.total_rows(), 1.0);
  const double l1_base =
      problem.num_sources() > 0 ? theorem_lambda1(p, problem.total_rows(), problem.n_source(), 1.0)
                                : theorem_lambda0(p, problem.total_rows(), 1.0);

  std::vector<double> grid = config.scale_grid;
  std::sort(grid.begin(), grid.end(), std::greater<>());
  const std::size_t g0 = grid.size(), g1 = grid.size();

  // The two constants are tuned on a product grid: the contrast scale sets
  // the linearization threshold and the beta scale the pooled shrinkage, and
  // their best values sit far apart. Every data-dependent step, the initial
  // fits included, is redone inside each fold; scoring weights built from
  // held-out rows would leak.
  const int folds = std::min(config.cv_folds, problem.n_target());
  std::vector<double> score(g0 * g1, 0.0);
  for (int f = 0; f < folds; ++f) {
    const TargetFoldSplit split = split_target_fold(problem, f, folds);
    const Estimate fold_init =
        fit_initial(split.train, config.scale_grid, config.cv_folds, config.init_cd);
    const StackedDesign sd = stack_design(split.train);
    const double n_obj = split.train.total_rows();
    Vector warm = Vector::Zero(sd.dim());
    for (std::size_t i = 0; i < g0; ++i) {
      // snake over the grid so the warm start always moves to a neighbor
      for (std::size_t step = 0; step < g1; ++step) {
        const std::size_t j = (i % 2 == 0) ? step : g1 - 1 - step;
        const Estimate fit = lla_rounds_fit(n_obj, sd, fold_init, grid[i] * l0_base,
                                            grid[j] * l1_base, config, config.cv_cd, &warm,
                                            nullptr);
        score[i * g1 + j] += (split.holdout_y - split.holdout_X * fit.beta_hat).squaredNorm() /
                             split.holdout_y.size();
      }
    }
  }
  // strict improvement wins; exact ties go to the smaller pair of scales
  std::size_t best = 0;
  for (std::size_t i = 0; i < g0; ++i)
    for (std::size_t j = 0; j < g1; ++j) {
      const std::size_t idx = i * g1 + j;
      if (score[idx] < score[best] ||
          (score[idx] == score[best] &&
           (grid[i] < grid[best / g1] ||
            (grid[i] == grid[best / g1] && grid[j] < grid[best % g1]))))
        best = idx;
    }

  FAdaFit out;
  out.scale = grid[best / g1];
  out.scale1 = grid[best % g1];
  out.initial = fit_initial(problem, config.scale_grid, config.cv_folds, config.init_cd);
  const StackedDesign sd = stack_design(problem);
  out.estimate = lla_rounds_fit(problem.total_rows(), sd, out.initial, out.scale * l0_base,
                                out.scale1 * l1_base, config, config.cd, nullptr, &out.weights);
  return out;
}

}  // namespace adatrans
