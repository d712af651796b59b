#pragma once

#include "adatrans/datagen.hpp"
#include "adatrans/f_adatrans.hpp"
#include "adatrans/s_adatrans.hpp"
#include "adatrans/types.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adatrans {

enum class Method {
  lasso,
  pooled_lasso,
  f_ada,
  f_ada_oracle,
  oracle_est,
  s_ada,
  s_ada_oracle,
};

std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

enum class SweepFactor { none, h_wedge, s_k, num_sources, n_source };

std::string sweep_factor_name(SweepFactor f);
std::optional<SweepFactor> parse_sweep_factor(const std::string& name);

enum class Profile { desk, paper };

struct ExperimentSpec {
  SettingSpec setting_spec;
  std::vector<Method> methods;
  int reps = 100;
  SweepFactor sweep_factor = SweepFactor::none;
  std::vector<double> sweep_values;
  std::uint64_t base_seed = 0;
  bool record_timings = false;  // off by default so output bytes reproduce
  int threads = 0;              // 0 = library default

  void validate() const;
};

/// Desk: p = 100, reps = 20, sample-wise s_k = 90. Paper: the full-size
/// defaults (p = 500, reps = 100).
void apply_profile(SettingSpec& spec, Profile profile);
void apply_profile(ExperimentSpec& spec, Profile profile);

struct MethodFit {
  Estimate estimate;
  // kappa_F for the known-structure fits (needs the true noise vector),
  // kappa_S for the sample-weighted fits; NaN otherwise.
  double kappa_diag;
};

/// Fits one method on a problem. The oracle variants need the ground truth;
/// they throw std::invalid_argument without it.
MethodFit fit_single_method(Method method, const TransferProblem& problem,
                            const GroundTruth* truth, const Vector* noise = nullptr);

// One record per (method, sweep value, replication). Schema v1; the CSV
// header below is the normative column order.
struct ResultRow {
  std::string method;
  int setting = 1;
  int p = 0, s = 0, n_t = 0, n_s = 0, k = 0;
  double h_wedge = 0.0;
  int s_k = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double l2_error_sq = 0.0;
  double delta_support_f1 = 0.0;  // NaN when the method has no contrasts
  double kappa_diag = 0.0;        // kappa_F / kappa_S where applicable, NaN otherwise
  double runtime_ms = 0.0;
  bool converged = true;
};

inline constexpr int kCsvSchemaVersion = 1;
const char* csv_header();

/// Runs every (sweep value x replication x method) cell. Each replication's
/// problem is drawn from a seed that depends only on (base_seed, sweep value,
/// rep), so the method list never changes the data any fit sees. Replications
/// run in parallel; rows come back in (value, rep, method) order regardless
/// of thread count. A failed fit yields a row with converged = false and the
/// run continues.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

void emit_csv(const std::vector<ResultRow>& rows, std::ostream& os);
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> parse_csv(std::istream& is);

/// Mean/sd of the squared estimation error per (method, configuration) group.
struct SummaryRow {
  std::string method;
  int setting = 1;
  int p = 0, s = 0, n_t = 0, n_s = 0, k = 0;
  double h_wedge = 0.0;
  int s_k = 0;
  int reps = 0;
  double mean_l2_error_sq = 0.0;
  double sd_l2_error_sq = 0.0;  // n-1 denominator; 0 for a single row
};

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
void emit_summary(const std::vector<SummaryRow>& rows, const std::string& path);

/// Key-value experiment config (one `key = value` per line, '#' comments).
/// Unknown keys or malformed values throw std::invalid_argument.
ExperimentSpec parse_experiment_config(const std::map<std::string, std::string>& kv);

/// Same key set restricted to instance generation (`seed` maps to the
/// instance seed rather than the replication base seed).
SettingSpec parse_setting_config(const std::map<std::string, std::string>& kv);

}  // namespace adatrans
