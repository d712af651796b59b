#include "adatrans/penalty.hpp"

#include <cmath>
#include <stdexcept>

namespace adatrans {

void PenaltySpec::validate() const {
  if (lambda < 0) throw std::invalid_argument("PenaltySpec: lambda must be >= 0");
  if (family == PenaltyFamily::scad && a <= 2.0)
    throw std::invalid_argument("PenaltySpec: SCAD requires a > 2");
  if (family == PenaltyFamily::mcp && gamma <= 1.0)
    throw std::invalid_argument("PenaltySpec: MCP requires gamma > 1");
}

double penalty_derivative(double t, const PenaltySpec& spec) {
  spec.validate();
  if (t < 0) throw std::invalid_argument("penalty_derivative: t must be >= 0 (pass |t|)");
  const double lam = spec.lambda;
  switch (spec.family) {
    case PenaltyFamily::l1:
      return lam;
    case PenaltyFamily::scad:
      if (t <= lam) return lam;
      if (t <= spec.a * lam) return (spec.a * lam - t) / (spec.a - 1.0);
      return 0.0;
    case PenaltyFamily::mcp:
      return std::max(lam - t / spec.gamma, 0.0);
  }
  return lam;
}

FeatureWeights lla_feature_weights(const Estimate& init, double lambda0, double lambda1,
                                   PenaltyFamily family, double a, double gamma) {
  if (lambda0 <= 0 || lambda1 <= 0)
    throw std::invalid_argument("lla_feature_weights: lambda0 and lambda1 must be > 0");
  const int p = static_cast<int>(init.beta_hat.size());
  if (p == 0) throw std::invalid_argument("lla_feature_weights: empty initial estimate");

  PenaltySpec spec0{family, lambda0, a, gamma};
  PenaltySpec spec1{family, lambda1, a, gamma};

  FeatureWeights weights;
  weights.lambda0 = lambda0;
  weights.lambda1 = lambda1;
  weights.w0.resize(p);
  for (int j = 0; j < p; ++j)
    weights.w0[j] = penalty_derivative(std::abs(init.beta_hat[j]), spec0) / lambda0;
  for (const Vector& d : init.delta_hats) {
    if (d.size() != p)
      throw std::invalid_argument("lla_feature_weights: contrast length mismatch");
    Vector wk(p);
    for (int j = 0; j < p; ++j)
      wk[j] = penalty_derivative(std::abs(d[j]), spec1) / lambda1;
    weights.wk.push_back(std::move(wk));
  }
  return weights;
}

}  // namespace adatrans
