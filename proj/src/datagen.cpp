#include "adatrans/datagen.hpp"

#include "adatrans/kernels.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace adatrans {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream ^ 0xd1b54a32d192ed03ULL));
}

SettingSpec SettingSpec::defaults(Setting which) {
  SettingSpec spec;
  spec.setting = which;
  if (which == Setting::feature_wise) {
    spec.h_wedge = 0.6;
    spec.s_k = 25;
  } else {
    spec.h_wedge = 0.024;
    spec.s_k = 450;
  }
  return spec;
}

void SettingSpec::validate() const {
  if (p < 1) throw std::invalid_argument("SettingSpec: p must be >= 1");
  if (s < 0 || s > p) throw std::invalid_argument("SettingSpec: need 0 <= s <= p");
  if (s % 2 != 0)
    throw std::invalid_argument("SettingSpec: s must be even (the s/2 split is undefined)");
  if (s_k < 0 || s_k > p) throw std::invalid_argument("SettingSpec: need 0 <= s_k <= p");
  if (n_t < 1) throw std::invalid_argument("SettingSpec: n_t must be >= 1");
  if (k < 0) throw std::invalid_argument("SettingSpec: k must be >= 0");
  if (k > 0 && n_s < 1) throw std::invalid_argument("SettingSpec: n_s must be >= 1");
  if (setting == Setting::feature_wise && k >= 2 && s_k < s / 2 + 1)
    throw std::invalid_argument(
        "SettingSpec: feature-wise even-source support {s/2+1..s_k} needs s_k >= s/2+1");
  if (h_wedge < 0) throw std::invalid_argument("SettingSpec: h_wedge must be >= 0");
  if (noise_sd < 0) throw std::invalid_argument("SettingSpec: noise_sd must be >= 0");
  if (covariance == CovarianceKind::toeplitz && std::abs(toeplitz_rho) >= 1.0)
    throw std::invalid_argument("SettingSpec: Toeplitz rho must satisfy |rho| < 1");
}

Matrix make_covariance(CovarianceKind kind, double rho, int p) {
  if (p < 1) throw std::invalid_argument("make_covariance: p must be >= 1");
  if (kind == CovarianceKind::identity) return Matrix::Identity(p, p);
  if (std::abs(rho) >= 1.0)
    throw std::invalid_argument("make_covariance: Toeplitz rho must satisfy |rho| < 1");
  Matrix sigma(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
  return sigma;
}

TaskDistribution make_task_distribution(const SettingSpec& spec) {
  spec.validate();
  TaskDistribution dist;
  const Matrix sigma = make_covariance(spec.covariance, spec.toeplitz_rho, spec.p);
  dist.sigma.assign(spec.k + 1, sigma);
  dist.noise_sd.assign(spec.k + 1, spec.noise_sd);
  return dist;
}

GroundTruth make_ground_truth(const SettingSpec& spec) {
  spec.validate();
  GroundTruth truth;
  truth.beta = Vector::Zero(spec.p);
  for (int j = 0; j < spec.s; ++j) truth.beta[j] = spec.beta_value;

  std::mt19937_64 sign_rng(substream_seed(spec.seed, 0x5161u));
  std::bernoulli_distribution coin(0.5);
  auto sign_at = [&](int j) {
    if (spec.sign_pattern == SignPattern::random) return coin(sign_rng) ? 1.0 : -1.0;
    return (j % 2 == 0) ? 1.0 : -1.0;
  };

  truth.deltas.reserve(spec.k);
  for (int k = 1; k <= spec.k; ++k) {
    Vector delta = Vector::Zero(spec.p);
    const bool odd = (k % 2 == 1);
    if (spec.setting == Setting::feature_wise) {
      // Non-overlapping contrast supports: odd sources perturb the first s/2
      // target features, even sources the features s/2+1..s_k.
      const int lo = odd ? 0 : spec.s / 2;
      const int hi = odd ? spec.s / 2 : spec.s_k;
      for (int j = lo; j < hi; ++j) delta[j] = spec.h_wedge * sign_at(j);
    } else {
      // Dense weak contrasts on the first s_k features; odd sources are ten
      // times closer to the target than even ones.
      const double mag = odd ? spec.h_wedge / 10.0 : spec.h_wedge;
      for (int j = 0; j < spec.s_k; ++j) delta[j] = mag * sign_at(j);
    }
    truth.deltas.push_back(std::move(delta));
  }

  truth.support0 = support_of(truth.beta);
  truth.h_min0 = truth.support0.empty() ? 0.0 : std::abs(spec.beta_value);
  double h_min_k = 0.0;
  for (const Vector& d : truth.deltas) {
    truth.supports.push_back(support_of(d));
    double l1 = 0.0;
    for (int j : truth.supports.back()) {
      l1 += std::abs(d[j]);
      h_min_k = (h_min_k == 0.0) ? std::abs(d[j]) : std::min(h_min_k, std::abs(d[j]));
    }
    truth.h_l1.push_back(l1);
  }
  truth.h_min_k = h_min_k;
  return truth;
}

namespace {

// One task draw: X row-major standard normals (optionally colored by the
// Cholesky factor of sigma), then the noise vector. The draw order is part of
// the determinism contract.
struct TaskDraw {
  Matrix X;
  Vector eps;
};

TaskDraw draw_task(int n, int p, const Matrix* chol_lower, double noise_sd,
                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TaskDraw out;
  out.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) out.X(i, j) = gauss(rng);
  if (chol_lower) out.X = kernels::scale_rows_into(out.X, *chol_lower);
  out.eps.resize(n);
  for (int i = 0; i < n; ++i) out.eps[i] = noise_sd * gauss(rng);
  return out;
}

}  // namespace

GeneratedSample sample_problem_with_noise(const SettingSpec& spec, const GroundTruth& truth) {
  spec.validate();
  if (truth.beta.size() != spec.p || static_cast<int>(truth.deltas.size()) != spec.k)
    throw std::invalid_argument("sample_problem: truth dimensions do not match spec");

  Matrix chol;
  const Matrix* chol_ptr = nullptr;
  if (spec.covariance != CovarianceKind::identity) {
    const Matrix sigma = make_covariance(spec.covariance, spec.toeplitz_rho, spec.p);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("sample_problem: covariance is not positive definite");
    chol = llt.matrixL();
    chol_ptr = &chol;
  }

  GeneratedSample out;
  out.noise.resize(spec.total_rows());

  TaskDraw target = draw_task(spec.n_t, spec.p, chol_ptr, spec.noise_sd,
                              substream_seed(spec.seed, 0));
  out.problem.target_y = target.X * truth.beta + target.eps;
  out.problem.target_X = std::move(target.X);
  out.noise.head(spec.n_t) = target.eps;

  for (int k = 1; k <= spec.k; ++k) {
    TaskDraw src = draw_task(spec.n_s, spec.p, chol_ptr, spec.noise_sd,
                             substream_seed(spec.seed, static_cast<std::uint64_t>(k)));
    TaskSample sample;
    sample.y = src.X * (truth.beta + truth.deltas[k - 1]) + src.eps;
    sample.X = std::move(src.X);
    out.noise.segment(spec.n_t + (k - 1) * spec.n_s, spec.n_s) = src.eps;
    out.problem.sources.push_back(std::move(sample));
  }
  out.problem.validate();
  return out;
}

TransferProblem sample_problem(const SettingSpec& spec, const GroundTruth& truth) {
  return sample_problem_with_noise(spec, truth).problem;
}

}  // namespace adatrans
