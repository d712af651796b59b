#include "adatrans/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adatrans {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string method_name(Method m) {
  switch (m) {
    case Method::lasso: return "lasso";
    case Method::pooled_lasso: return "pooled-lasso";
    case Method::f_ada: return "f-ada";
    case Method::f_ada_oracle: return "f-ada-oracle";
    case Method::oracle_est: return "oracle-est";
    case Method::s_ada: return "s-ada";
    case Method::s_ada_oracle: return "s-ada-oracle";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& name) {
  for (Method m : {Method::lasso, Method::pooled_lasso, Method::f_ada, Method::f_ada_oracle,
                   Method::oracle_est, Method::s_ada, Method::s_ada_oracle})
    if (method_name(m) == name) return m;
  return std::nullopt;
}

std::string sweep_factor_name(SweepFactor f) {
  switch (f) {
    case SweepFactor::none: return "none";
    case SweepFactor::h_wedge: return "h_wedge";
    case SweepFactor::s_k: return "s_k";
    case SweepFactor::num_sources: return "K";
    case SweepFactor::n_source: return "n_S";
  }
  return "?";
}

std::optional<SweepFactor> parse_sweep_factor(const std::string& name) {
  for (SweepFactor f : {SweepFactor::none, SweepFactor::h_wedge, SweepFactor::s_k,
                        SweepFactor::num_sources, SweepFactor::n_source})
    if (sweep_factor_name(f) == name) return f;
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  setting_spec.validate();
  if (reps < 1) throw std::invalid_argument("ExperimentSpec: reps must be >= 1");
  if (methods.empty()) throw std::invalid_argument("ExperimentSpec: no methods selected");
  if (sweep_factor != SweepFactor::none && sweep_values.empty())
    throw std::invalid_argument("ExperimentSpec: sweep factor set but no values");
  if (sweep_factor == SweepFactor::none && !sweep_values.empty())
    throw std::invalid_argument("ExperimentSpec: sweep values without a factor");
  for (double v : sweep_values) {
    if (!(v > 0)) throw std::invalid_argument("ExperimentSpec: sweep values must be positive");
    if (sweep_factor != SweepFactor::h_wedge && v != std::floor(v))
      throw std::invalid_argument("ExperimentSpec: integer sweep factor needs integer values");
  }
}

void apply_profile(SettingSpec& spec, Profile profile) {
  if (profile == Profile::desk) {
    spec.p = 100;
    if (spec.setting == Setting::sample_wise) spec.s_k = 90;
  } else {
    const SettingSpec fresh = SettingSpec::defaults(spec.setting);
    spec.p = fresh.p;
    spec.s_k = fresh.s_k;
  }
}

void apply_profile(ExperimentSpec& spec, Profile profile) {
  apply_profile(spec.setting_spec, profile);
  spec.reps = profile == Profile::desk ? 20 : 100;
}

namespace {

SettingSpec with_sweep_value(SettingSpec spec, SweepFactor factor, double value) {
  switch (factor) {
    case SweepFactor::none: break;
    case SweepFactor::h_wedge: spec.h_wedge = value; break;
    case SweepFactor::s_k: spec.s_k = static_cast<int>(value); break;
    case SweepFactor::num_sources: spec.k = static_cast<int>(value); break;
    case SweepFactor::n_source: spec.n_s = static_cast<int>(value); break;
  }
  return spec;
}

Estimate lasso_estimate(const TransferProblem& problem) {
  const LassoCvResult fit =
      cv_lasso(problem.target_X, problem.target_y, default_scale_grid(), 5);
  Estimate est;
  est.beta_hat = fit.coef;
  est.iterations = fit.fit.sweeps;
  est.kkt_residual = fit.fit.kkt_residual;
  est.objective_value = fit.fit.objective;
  est.converged = fit.fit.converged;
  return est;
}

// All rows, one shared coefficient vector; the negative-transfer baseline.
Estimate pooled_lasso_estimate(const TransferProblem& problem) {
  const int p = problem.p();
  const int n = problem.total_rows();
  Matrix A(n, p);
  Vector b(n);
  A.topRows(problem.n_target()) = problem.target_X;
  b.head(problem.n_target()) = problem.target_y;
  int at = problem.n_target();
  for (const auto& src : problem.sources) {
    A.middleRows(at, src.X.rows()) = src.X;
    b.segment(at, src.y.size()) = src.y;
    at += static_cast<int>(src.X.rows());
  }
  const LassoCvResult fit = cv_lasso(A, b, default_scale_grid(), 5);
  Estimate est;
  est.beta_hat = fit.coef;
  est.iterations = fit.fit.sweeps;
  est.kkt_residual = fit.fit.kkt_residual;
  est.objective_value = fit.fit.objective;
  est.converged = fit.fit.converged;
  return est;
}

Vector truth_h(const GroundTruth& truth) {
  Vector h(truth.h_l1.size());
  for (std::size_t i = 0; i < truth.h_l1.size(); ++i) h[i] = truth.h_l1[i];
  return h;
}

}  // namespace

MethodFit fit_single_method(Method method, const TransferProblem& problem,
                            const GroundTruth* truth, const Vector* noise) {
  const bool needs_truth = method == Method::f_ada_oracle || method == Method::oracle_est ||
                           method == Method::s_ada_oracle;
  if (needs_truth && !truth)
    throw std::invalid_argument("fit_single_method: " + method_name(method) +
                                " requires the ground truth");
  MethodFit out;
  out.kappa_diag = kNaN;
  switch (method) {
    case Method::lasso:
      out.estimate = lasso_estimate(problem);
      break;
    case Method::pooled_lasso:
      out.estimate = pooled_lasso_estimate(problem);
      break;
    case Method::f_ada:
      out.estimate = fit_f_adatrans_auto(problem).estimate;
      break;
    case Method::f_ada_oracle: {
      const FeatureWeights w =
          oracle_feature_weights(problem.p(), truth->support0, truth->supports);
      const double l0 = theorem_lambda0(problem.p(), problem.total_rows(), kOracleWeightScale);
      const double l1 = theorem_lambda1(problem.p(), problem.total_rows(),
                                        problem.n_source(), kOracleWeightScale);
      out.estimate = fit_f_adatrans(problem, w, l0, l1);
      if (noise) out.kappa_diag = kappa_f(problem, truth->support0, truth->supports, *noise);
      break;
    }
    case Method::oracle_est: {
      out.estimate = fit_oracle(problem, truth->support0, truth->supports);
      if (noise) out.kappa_diag = kappa_f(problem, truth->support0, truth->supports, *noise);
      break;
    }
    case Method::s_ada: {
      const SAdaFit fit = fit_s_adatrans_auto(problem);
      out.estimate = fit.estimate;
      if (truth) {
        const Vector h = truth_h(*truth);
        out.kappa_diag = kappa_s_hbar(fit.weights, h, ProblemDims::of(problem)).kappa_s;
      }
      break;
    }
    case Method::s_ada_oracle: {
      // Known informative level: bound-minimizing weights from the true
      // (s, h_k); the closed form covers K = 1, the QP the general case. The
      // rate constants stay unknown, so the schedule multiplier is still
      // cross-validated.
      const ProblemDims dims = ProblemDims::of(problem);
      const Vector h = truth_h(*truth);
      SampleWeights w;
      if (dims.k == 1)
        w = optimal_weights_k1(truth->sparsity(), dims.p, dims.n_t, dims.n_s, h[0]);
      else if (dims.k > 1)
        w = select_weights_qp(truth->sparsity(), h, 1.0, dims);
      else
        w = normalize_weights(Vector::Ones(1), dims.n_t, dims.n_s);
      const SAdaConfig config;
      const double s_true = truth->sparsity();
      const double logp = std::log(static_cast<double>(dims.p));
      double best_m = 1.0, best_score = std::numeric_limits<double>::infinity();
      const int folds = std::min(config.cv_folds, problem.n_target());
      for (double m : config.multiplier_grid) {
        const SHyperparams hp = lambda_schedule(w, s_true, h, dims, m * config.c0, m * config.c1);
        double total = 0.0;
        for (int f = 0; f < folds; ++f) {
          const TargetFoldSplit split = split_target_fold(problem, f, folds);
          SHyperparams fold_hp = hp;
          fold_hp.lambda_t = fold_hp.c1 * std::sqrt(logp / split.train.n_target());
          const Estimate e = fit_s_adatrans(split.train, w, fold_hp, config.cv_admm);
          total += (split.holdout_y - split.holdout_X * e.beta_hat).squaredNorm() /
                   split.holdout_y.size();
        }
        if (total / folds < best_score) {
          best_score = total / folds;
          best_m = m;
        }
      }
      const SHyperparams hp =
          lambda_schedule(w, s_true, h, dims, best_m * config.c0, best_m * config.c1);
      out.estimate = fit_s_adatrans(problem, w, hp, config.admm);
      out.kappa_diag = kappa_s_hbar(w, h, dims).kappa_s;
      break;
    }
  }
  return out;
}

namespace {

bool has_contrasts(Method m) {
  switch (m) {
    case Method::lasso:
    case Method::pooled_lasso:
      return false;
    default:
      return true;
  }
}

double mean_delta_f1(const Estimate& est, const GroundTruth& truth) {
  if (est.delta_hats.empty() || truth.supports.empty()) return kNaN;
  double total = 0.0;
  for (std::size_t k = 0; k < est.delta_hats.size(); ++k)
    total += support_f1(support_of(est.delta_hats[k]), truth.supports[k]);
  return total / est.delta_hats.size();
}

std::uint64_t task_seed(std::uint64_t base, SweepFactor factor, double value, int rep) {
  const std::uint64_t vbits = std::bit_cast<std::uint64_t>(value);
  std::uint64_t s = substream_seed(base, static_cast<std::uint64_t>(factor));
  s = substream_seed(s, vbits);
  return substream_seed(s, static_cast<std::uint64_t>(rep));
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();

  std::vector<double> values = spec.sweep_values;
  if (spec.sweep_factor == SweepFactor::none) values = {0.0};

  struct Cell {
    SettingSpec spec;
    GroundTruth truth;
  };
  std::vector<Cell> cells;
  for (double v : values) {
    Cell cell;
    cell.spec = with_sweep_value(spec.setting_spec, spec.sweep_factor, v);
    cell.spec.validate();
    cell.truth = make_ground_truth(cell.spec);
    cells.push_back(std::move(cell));
  }

  const int n_methods = static_cast<int>(spec.methods.size());
  const int n_tasks = static_cast<int>(cells.size()) * spec.reps;
  std::vector<ResultRow> rows(static_cast<std::size_t>(n_tasks) * n_methods);

#ifdef _OPENMP
  const int threads = spec.threads > 0 ? spec.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (int t = 0; t < n_tasks; ++t) {
    const int cell_idx = t / spec.reps;
    const int rep = t % spec.reps;
    const Cell& cell = cells[cell_idx];
    SettingSpec draw_spec = cell.spec;
    draw_spec.seed = task_seed(spec.base_seed, spec.sweep_factor, values[cell_idx], rep);

    ResultRow base;
    base.setting = static_cast<int>(draw_spec.setting);
    base.p = draw_spec.p;
    base.s = draw_spec.s;
    base.n_t = draw_spec.n_t;
    base.n_s = draw_spec.n_s;
    base.k = draw_spec.k;
    base.h_wedge = draw_spec.h_wedge;
    base.s_k = draw_spec.s_k;
    base.rep = rep;
    base.seed = draw_spec.seed;

    bool sample_ok = true;
    GeneratedSample sample;
    try {
      sample = sample_problem_with_noise(draw_spec, cell.truth);
    } catch (const std::exception&) {
      sample_ok = false;
    }

    for (int m = 0; m < n_methods; ++m) {
      ResultRow row = base;
      row.method = method_name(spec.methods[m]);
      row.l2_error_sq = kNaN;
      row.delta_support_f1 = kNaN;
      row.kappa_diag = kNaN;
      row.converged = false;
      if (sample_ok) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const MethodFit outcome =
              fit_single_method(spec.methods[m], sample.problem, &cell.truth, &sample.noise);
          row.l2_error_sq = l2_error_sq(outcome.estimate.beta_hat, cell.truth.beta);
          if (has_contrasts(spec.methods[m]))
            row.delta_support_f1 = mean_delta_f1(outcome.estimate, cell.truth);
          row.kappa_diag = outcome.kappa_diag;
          row.converged = outcome.estimate.converged;
        } catch (const std::exception&) {
          // leave the failure row in place; the sweep continues
        }
        const auto t1 = std::chrono::steady_clock::now();
        if (spec.record_timings)
          row.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      }
      rows[static_cast<std::size_t>(t) * n_methods + m] = std::move(row);
    }
  }
  return rows;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string optional_double(double v) { return std::isnan(v) ? "" : format_double(v); }

}  // namespace

const char* csv_header() {
  return "method,setting,p,s,n_t,n_s,k,h_wedge,s_k,rep,seed,l2_error_sq,"
         "delta_support_f1,kappa_diag,runtime_ms,converged";
}

void emit_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  os << csv_header() << "\n";
  for (const ResultRow& r : rows) {
    os << r.method << ',' << r.setting << ',' << r.p << ',' << r.s << ',' << r.n_t << ','
       << r.n_s << ',' << r.k << ',' << format_double(r.h_wedge) << ',' << r.s_k << ','
       << r.rep << ',' << r.seed << ',' << format_double(r.l2_error_sq) << ','
       << optional_double(r.delta_support_f1) << ',' << optional_double(r.kappa_diag) << ','
       << format_double(r.runtime_ms) << ',' << (r.converged ? 1 : 0) << "\n";
  }
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emit_csv: cannot open " + path + " for writing");
  emit_csv(rows, os);
  os.flush();
  if (!os) throw std::runtime_error("emit_csv: write to " + path + " failed");
}

std::vector<ResultRow> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("parse_csv: empty input");
  if (line != csv_header()) throw std::runtime_error("parse_csv: unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (fields.size() != 16) throw std::runtime_error("parse_csv: bad field count");
    ResultRow r;
    r.method = fields[0];
    r.setting = std::stoi(fields[1]);
    r.p = std::stoi(fields[2]);
    r.s = std::stoi(fields[3]);
    r.n_t = std::stoi(fields[4]);
    r.n_s = std::stoi(fields[5]);
    r.k = std::stoi(fields[6]);
    r.h_wedge = std::stod(fields[7]);
    r.s_k = std::stoi(fields[8]);
    r.rep = std::stoi(fields[9]);
    r.seed = std::stoull(fields[10]);
    r.l2_error_sq = std::stod(fields[11]);
    r.delta_support_f1 = fields[12].empty() ? kNaN : std::stod(fields[12]);
    r.kappa_diag = fields[13].empty() ? kNaN : std::stod(fields[13]);
    r.runtime_ms = std::stod(fields[14]);
    r.converged = fields[15] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("summarize: no rows");
  using Key = std::tuple<std::string, int, int, int, int, int, int, double, int>;
  std::map<Key, std::vector<double>> groups;
  for (const ResultRow& r : rows) {
    const Key key{r.method, r.setting, r.p, r.s, r.n_t, r.n_s, r.k, r.h_wedge, r.s_k};
    groups[key].push_back(r.l2_error_sq);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, errors] : groups) {
    SummaryRow s;
    std::tie(s.method, s.setting, s.p, s.s, s.n_t, s.n_s, s.k, s.h_wedge, s.s_k) = key;
    s.reps = static_cast<int>(errors.size());
    double mean = 0.0;
    for (double e : errors) mean += e;
    mean /= errors.size();
    double ss = 0.0;
    for (double e : errors) ss += (e - mean) * (e - mean);
    s.mean_l2_error_sq = mean;
    s.sd_l2_error_sq = errors.size() > 1 ? std::sqrt(ss / (errors.size() - 1)) : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

void emit_summary(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("emit_summary: cannot open " + path + " for writing");
  os << "method,setting,p,s,n_t,n_s,k,h_wedge,s_k,reps,mean_l2_error_sq,sd_l2_error_sq\n";
  for (const SummaryRow& r : rows) {
    os << r.method << ',' << r.setting << ',' << r.p << ',' << r.s << ',' << r.n_t << ','
       << r.n_s << ',' << r.k << ',' << format_double(r.h_wedge) << ',' << r.s_k << ','
       << r.reps << ',' << format_double(r.mean_l2_error_sq) << ','
       << format_double(r.sd_l2_error_sq) << "\n";
  }
  if (!os) throw std::runtime_error("emit_summary: write to " + path + " failed");
}

namespace {

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for '" + key + "': " + value);
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for '" + key + "': " + value);
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + value);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(value);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// Shared SettingSpec keys; returns false on keys it does not know.
bool apply_setting_key(SettingSpec& spec, const std::string& key, const std::string& value) {
  if (key == "p") spec.p = to_int(key, value);
  else if (key == "s") spec.s = to_int(key, value);
  else if (key == "nt") spec.n_t = to_int(key, value);
  else if (key == "ns") spec.n_s = to_int(key, value);
  else if (key == "k") spec.k = to_int(key, value);
  else if (key == "h") spec.h_wedge = to_double(key, value);
  else if (key == "sk") spec.s_k = to_int(key, value);
  else if (key == "beta_value") spec.beta_value = to_double(key, value);
  else if (key == "noise_sd") spec.noise_sd = to_double(key, value);
  else if (key == "rho") spec.toeplitz_rho = to_double(key, value);
  else if (key == "cov") {
    if (value == "identity") spec.covariance = CovarianceKind::identity;
    else if (value == "toeplitz") spec.covariance = CovarianceKind::toeplitz;
    else throw std::invalid_argument("config: cov must be identity or toeplitz");
  } else if (key == "sign") {
    if (value == "alternating") spec.sign_pattern = SignPattern::alternating;
    else if (value == "random") spec.sign_pattern = SignPattern::random;
    else throw std::invalid_argument("config: sign must be alternating or random");
  } else {
    return false;
  }
  return true;
}

SettingSpec initial_setting(const std::map<std::string, std::string>& kv) {
  SettingSpec spec = SettingSpec::defaults(Setting::feature_wise);
  if (auto it = kv.find("setting"); it != kv.end()) {
    const int s = to_int("setting", it->second);
    if (s != 1 && s != 2) throw std::invalid_argument("config: setting must be 1 or 2");
    spec = SettingSpec::defaults(static_cast<Setting>(s));
  }
  if (auto it = kv.find("profile"); it != kv.end()) {
    if (it->second == "desk") apply_profile(spec, Profile::desk);
    else if (it->second == "paper") apply_profile(spec, Profile::paper);
    else throw std::invalid_argument("config: profile must be desk or paper");
  }
  return spec;
}

}  // namespace

SettingSpec parse_setting_config(const std::map<std::string, std::string>& kv) {
  SettingSpec spec = initial_setting(kv);
  for (const auto& [key, value] : kv) {
    if (key == "setting" || key == "profile") continue;
    if (key == "seed") spec.seed = std::stoull(value);
    else if (!apply_setting_key(spec, key, value))
      throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  spec.validate();
  return spec;
}

ExperimentSpec parse_experiment_config(const std::map<std::string, std::string>& kv) {
  ExperimentSpec spec;
  spec.setting_spec = initial_setting(kv);
  if (kv.count("profile")) spec.reps = kv.at("profile") == "desk" ? 20 : 100;

  for (const auto& [key, value] : kv) {
    if (key == "setting" || key == "profile") continue;
    if (apply_setting_key(spec.setting_spec, key, value)) continue;
    if (key == "seed") spec.base_seed = std::stoull(value);
    else if (key == "reps") spec.reps = to_int(key, value);
    else if (key == "threads") spec.threads = to_int(key, value);
    else if (key == "timings") spec.record_timings = to_bool(key, value);
    else if (key == "methods") {
      for (const std::string& name : split_list(value)) {
        const auto m = parse_method(name);
        if (!m) throw std::invalid_argument("config: unknown method '" + name + "'");
        spec.methods.push_back(*m);
      }
    } else if (key == "sweep_factor") {
      const auto f = parse_sweep_factor(value);
      if (!f) throw std::invalid_argument("config: unknown sweep factor '" + value + "'");
      spec.sweep_factor = *f;
    } else if (key == "sweep_values") {
      for (const std::string& v : split_list(value))
        spec.sweep_values.push_back(to_double("sweep_values", v));
    } else if (key == "out" || key == "strict") {
      // handled by the CLI layer
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

}  // namespace adatrans
