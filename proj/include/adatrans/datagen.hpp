#pragma once

#include "adatrans/types.hpp"

#include <cstdint>

namespace adatrans {

enum class Setting { feature_wise = 1, sample_wise = 2 };
enum class CovarianceKind { identity, toeplitz };
enum class SignPattern { alternating, random };

/// Configuration of one synthetic instance family. Defaults follow the two
/// standard benchmark settings (see SettingSpec::defaults).
struct SettingSpec {
  Setting setting = Setting::feature_wise;
  int p = 500;
  int s = 8;
  int n_t = 50;
  int n_s = 250;
  int k = 2;
  double h_wedge = 0.6;     // contrast strength
  int s_k = 25;             // contrast cardinality
  double beta_value = 0.3;  // nonzero target coefficient value
  CovarianceKind covariance = CovarianceKind::identity;
  double toeplitz_rho = 0.0;
  double noise_sd = 1.0;
  SignPattern sign_pattern = SignPattern::alternating;
  std::uint64_t seed = 0;

  int total_rows() const { return n_t + k * n_s; }

  // Setting 1: h_wedge = 0.6, s_k = 25. Setting 2: h_wedge = 0.024, s_k = 450.
  // Shared defaults: p = 500, s = 8, n_t = 50, n_s = 250, k = 2.
  static SettingSpec defaults(Setting which);

  void validate() const;  // throws std::invalid_argument
};

/// Identity or Toeplitz(rho) covariance with entries rho^|i-j|; |rho| < 1.
Matrix make_covariance(CovarianceKind kind, double rho, int p);

TaskDistribution make_task_distribution(const SettingSpec& spec);

/// Builds the true beta and contrasts for the spec's setting.
///
/// beta_j = beta_value for j < s, else 0. Feature-wise setting: source k
/// (1-based) has contrast support {0..s/2-1} for odd k and {s/2..s_k-1} for
/// even k, all entries of magnitude h_wedge. Sample-wise setting: support
/// {0..s_k-1} for every source, magnitude h_wedge/10 for odd k and h_wedge
/// for even k. Nonzero entries carry alternating signs +,-,+,... by
/// coordinate index (or random signs drawn from the spec seed).
GroundTruth make_ground_truth(const SettingSpec& spec);

struct GeneratedSample {
  TransferProblem problem;
  Vector noise;  // concatenated true noise (target first), for diagnostics
};

/// Draws one problem: rows of each X are i.i.d. Gaussian with the task
/// covariance, y = X (beta + delta_k) + eps. Deterministic given the seed;
/// task k uses an independent substream derived from (seed, k).
GeneratedSample sample_problem_with_noise(const SettingSpec& spec, const GroundTruth& truth);
TransferProblem sample_problem(const SettingSpec& spec, const GroundTruth& truth);

/// Stable stream derivation (splitmix64-based); also used for replication seeds.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace adatrans
