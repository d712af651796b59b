#include "adatrans/bench.hpp"
#include "adatrans/io.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>

namespace {

using adatrans::ExperimentSpec;
using adatrans::GroundTruth;
using adatrans::LoadedProblem;
using adatrans::SettingSpec;
using adatrans::TransferProblem;
using adatrans::Vector;

// Subcommand options are collected as strings and validated by the same
// key-value parser the config file goes through, so flags and config files
// cannot drift apart.
struct FlagMap {
  std::map<std::string, std::string> kv;

  void bind(CLI::App* cmd, const char* flag, const char* key, const char* desc) {
    cmd->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { kv[std::string(key)] = v; }, desc);
  }

  void add_setting(CLI::App* cmd) {
    bind(cmd, "--setting", "setting", "1 = feature-wise, 2 = sample-wise");
    bind(cmd, "--p", "p", "feature dimension");
    bind(cmd, "--s", "s", "target sparsity (even)");
    bind(cmd, "--nt", "nt", "target sample size");
    bind(cmd, "--ns", "ns", "source sample size");
    bind(cmd, "--k", "k", "number of sources");
    bind(cmd, "--h", "h", "contrast strength h_wedge");
    bind(cmd, "--sk", "sk", "contrast cardinality s_k");
    bind(cmd, "--beta-value", "beta_value", "nonzero target coefficient");
    bind(cmd, "--cov", "cov", "identity | toeplitz");
    bind(cmd, "--rho", "rho", "Toeplitz correlation");
    bind(cmd, "--noise-sd", "noise_sd", "noise standard deviation");
    bind(cmd, "--sign", "sign", "alternating | random contrast signs");
    bind(cmd, "--seed", "seed", "random seed");
    bind(cmd, "--profile", "profile", "desk | paper size profile");
  }

  void add_bench(CLI::App* cmd) {
    bind(cmd, "--reps", "reps", "replications per configuration");
    bind(cmd, "--methods", "methods", "comma list, e.g. lasso,f-ada");
    bind(cmd, "--threads", "threads", "worker threads (0 = default)");
    bind(cmd, "--timings", "timings", "record per-fit wall time (breaks byte determinism)");
    bind(cmd, "--factor", "sweep_factor", "sweep factor: h_wedge | s_k | K | n_S");
    bind(cmd, "--values", "sweep_values", "comma list of sweep values");
  }
};

std::string summary_path(const std::string& csv_path) {
  const auto dot = csv_path.rfind(".csv");
  if (dot != std::string::npos && dot == csv_path.size() - 4)
    return csv_path.substr(0, dot) + "_summary.csv";
  return csv_path + "_summary.csv";
}

int run_bench(const FlagMap& flags, const std::string& config_path, const std::string& out,
              bool strict, bool require_sweep) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = adatrans::parse_config_file(config_path);
  for (const auto& [key, value] : flags.kv) kv[key] = value;  // flags override the file
  if (kv.count("methods") == 0)
    kv["methods"] = "lasso,f-ada";
  const ExperimentSpec spec = adatrans::parse_experiment_config(kv);
  if (require_sweep && spec.sweep_factor == adatrans::SweepFactor::none)
    throw std::invalid_argument("sweep: --factor and --values are required");

  const std::string out_path = kv.count("out") ? kv.at("out") : out;
  const auto rows = adatrans::run_experiment(spec);
  adatrans::emit_csv(rows, out_path);
  const auto summary = adatrans::summarize(rows);
  adatrans::emit_summary(summary, summary_path(out_path));

  std::printf("wrote %zu rows to %s\n", rows.size(), out_path.c_str());
  std::printf("wrote plot data to %s\n", summary_path(out_path).c_str());
  std::printf("%-14s %-10s %8s %12s %12s\n", "method", "h_wedge", "reps", "mean_l2", "sd_l2");
  for (const auto& s : summary)
    std::printf("%-14s %-10g %8d %12.5g %12.5g\n", s.method.c_str(), s.h_wedge, s.reps,
                s.mean_l2_error_sq, s.sd_l2_error_sq);

  if (strict)
    for (const auto& r : rows)
      if (!r.converged) {
        std::fprintf(stderr, "strict: %s rep %d did not converge\n", r.method.c_str(), r.rep);
        return 3;
      }
  return 0;
}

int run_gen(const FlagMap& flags, const std::string& out) {
  const SettingSpec spec = adatrans::parse_setting_config(flags.kv);
  const GroundTruth truth = adatrans::make_ground_truth(spec);
  const TransferProblem problem = adatrans::sample_problem(spec, truth);
  adatrans::dump_problem(problem, &truth, &spec, out);
  std::printf("wrote %s_meta.txt, %s_truth.csv and %d task file pairs (%s_X*.csv, %s_y*.csv)\n",
              out.c_str(), out.c_str(), problem.num_sources() + 1, out.c_str(), out.c_str());
  return 0;
}

int run_fit(const std::string& in, const std::string& method_name, const std::string& out,
            bool strict) {
  const auto method = adatrans::parse_method(method_name);
  if (!method) throw std::invalid_argument("fit: unknown method '" + method_name + "'");
  const LoadedProblem loaded = adatrans::load_problem(in);
  const GroundTruth* truth = loaded.truth ? &*loaded.truth : nullptr;
  const adatrans::MethodFit fit = adatrans::fit_single_method(*method, loaded.problem, truth);

  std::printf("method           = %s\n", method_name.c_str());
  if (truth)
    std::printf("l2_error_sq      = %.17g\n",
                adatrans::l2_error_sq(fit.estimate.beta_hat, truth->beta));
  std::printf("nnz(beta_hat)    = %zu\n", adatrans::support_of(fit.estimate.beta_hat).size());
  std::printf("iterations       = %d\n", fit.estimate.iterations);
  std::printf("kkt_residual     = %.3e\n", fit.estimate.kkt_residual);
  std::printf("constraint_gap   = %.3e\n", fit.estimate.constraint_gap);
  std::printf("converged        = %s\n", fit.estimate.converged ? "yes" : "no");

  if (!out.empty()) {
    adatrans::write_matrix_csv(fit.estimate.beta_hat, out + "_beta.csv");
    for (std::size_t k = 0; k < fit.estimate.delta_hats.size(); ++k)
      adatrans::write_matrix_csv(fit.estimate.delta_hats[k],
                                 out + "_delta" + std::to_string(k + 1) + ".csv");
    std::printf("coefficients written with prefix %s\n", out.c_str());
  }
  if (strict && !fit.estimate.converged) return 3;
  return 0;
}

int run_weights(const FlagMap& flags, const std::string& in, double lambda_w, double c_sigma,
                double h1_override) {
  TransferProblem problem;
  const GroundTruth* truth = nullptr;
  GroundTruth truth_storage;
  if (!in.empty()) {
    LoadedProblem loaded = adatrans::load_problem(in);
    problem = std::move(loaded.problem);
    if (loaded.truth) {
      truth_storage = std::move(*loaded.truth);
      truth = &truth_storage;
    }
  } else {
    const SettingSpec spec = adatrans::parse_setting_config(flags.kv);
    truth_storage = adatrans::make_ground_truth(spec);
    truth = &truth_storage;
    problem = adatrans::sample_problem(spec, truth_storage);
  }

  const adatrans::ProblemDims dims = adatrans::ProblemDims::of(problem);
  const adatrans::Estimate init = adatrans::fit_initial(problem);
  const double s_hat = static_cast<double>(adatrans::support_of(init.beta_hat).size());
  Vector h_hats(init.delta_hats.size());
  for (std::size_t k = 0; k < init.delta_hats.size(); ++k)
    h_hats[k] = init.delta_hats[k].lpNorm<1>();

  std::printf("initial estimates: s_hat = %g, h_hat =", s_hat);
  for (int k = 0; k < h_hats.size(); ++k) std::printf(" %.4g", h_hats[k]);
  std::printf("\n");

  const adatrans::SampleWeights qp =
      adatrans::select_weights_qp(s_hat, h_hats, lambda_w, dims);
  const adatrans::SDiagnostics qp_diag = adatrans::kappa_s_hbar(qp, h_hats, dims);
  std::printf("qp weights (lambda_w = %g):", lambda_w);
  for (int k = 0; k < qp.w.size(); ++k) std::printf(" %.6g", qp.w[k]);
  std::printf("   kappa_S = %.4g, h_bar = %.4g\n", qp_diag.kappa_s, qp_diag.h_bar);

  if (dims.k == 1) {
    double h1 = h1_override;
    if (h1 < 0) h1 = truth ? truth->h_l1[0] : h_hats[0];
    const double s_for_formula = truth ? truth->sparsity() : std::max(s_hat, 1.0);
    const adatrans::SampleWeights cw =
        adatrans::optimal_weights_k1(s_for_formula, dims.p, dims.n_t, dims.n_s, h1, c_sigma);
    std::printf("closed-form weights (h1 = %g, c_sigma = %g): %.6g %.6g\n", h1, c_sigma,
                cw.w[0], cw.w[1]);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive transfer learning estimators for high-dimensional regression"};
  app.require_subcommand(1);

  FlagMap gen_flags, bench_flags, sweep_flags, weights_flags;
  std::string gen_out = "problem";
  std::string bench_config, bench_out = "results.csv";
  std::string sweep_config, sweep_out = "results.csv";
  std::string fit_in, fit_method, fit_out;
  std::string weights_in;
  double weights_lambda_w = 1.0, weights_c_sigma = 1.0, weights_h1 = -1.0;
  bool bench_strict = false, sweep_strict = false, fit_strict = false;

  CLI::App* gen = app.add_subcommand("gen", "generate and dump a synthetic problem");
  gen_flags.add_setting(gen);
  gen->add_option("--out", gen_out, "output file prefix");

  CLI::App* fit = app.add_subcommand("fit", "fit one method on a dumped problem");
  fit->add_option("--in", fit_in, "problem file prefix")->required();
  fit->add_option("--method", fit_method, "method name")->required();
  fit->add_option("--out", fit_out, "coefficient output prefix");
  fit->add_flag("--strict", fit_strict, "exit 3 if the fit did not converge");

  CLI::App* bench = app.add_subcommand("bench", "run a replicated experiment");
  bench_flags.add_setting(bench);
  bench_flags.add_bench(bench);
  bench->add_option("--config", bench_config, "key = value config file");
  bench->add_option("--out", bench_out, "result CSV path");
  bench->add_flag("--strict", bench_strict, "exit 3 on any non-converged fit");

  CLI::App* sweep = app.add_subcommand("sweep", "run an experiment over a factor sweep");
  sweep_flags.add_setting(sweep);
  sweep_flags.add_bench(sweep);
  sweep->add_option("--config", sweep_config, "key = value config file");
  sweep->add_option("--out", sweep_out, "result CSV path");
  sweep->add_flag("--strict", sweep_strict, "exit 3 on any non-converged fit");

  CLI::App* weights = app.add_subcommand("weights", "print data-driven and closed-form weights");
  weights_flags.add_setting(weights);
  weights->add_option("--in", weights_in, "problem file prefix (generates one if absent)");
  weights->add_option("--lambda-w", weights_lambda_w, "penalty on the linear contrast terms");
  weights->add_option("--c-sigma", weights_c_sigma, "constant in the closed-form weights");
  weights->add_option("--h1", weights_h1, "contrast level for the closed-form weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return run_gen(gen_flags, gen_out);
    if (fit->parsed()) return run_fit(fit_in, fit_method, fit_out, fit_strict);
    if (bench->parsed()) return run_bench(bench_flags, bench_config, bench_out, bench_strict,
                                          false);
    if (sweep->parsed()) return run_bench(sweep_flags, sweep_config, sweep_out, sweep_strict,
                                          true);
    if (weights->parsed())
      return run_weights(weights_flags, weights_in, weights_lambda_w, weights_c_sigma,
                         weights_h1);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
