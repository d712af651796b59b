#pragma once

#include "adatrans/types.hpp"

namespace adatrans {

enum class PenaltyFamily { l1, scad, mcp };

struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::scad;
  double lambda = 0.0;
  double a = 3.7;      // SCAD knee; must be > 2
  double gamma = 3.0;  // MCP concavity; must be > 1

  void validate() const;  // throws std::invalid_argument
};

/// Derivative of the penalty at t >= 0.
///
/// L1: lambda. SCAD: lambda on [0, lambda], (a*lambda - t)/(a - 1) on
/// (lambda, a*lambda], 0 beyond. MCP: max(lambda - t/gamma, 0). Small entries
/// are penalized at the full lasso rate, large entries not at all.
double penalty_derivative(double t, const PenaltySpec& spec);

/// Per-coordinate weights for the fused-penalty fit.
struct FeatureWeights {
  Vector w0;               // length p, weights on |beta_j|
  std::vector<Vector> wk;  // K vectors of length p, weights on |delta_k_j|
  double lambda0 = 0.0;
  double lambda1 = 0.0;
};

/// One local-linear-approximation round: linearize the folded-concave penalty
/// at an initial estimate, giving w0_j = R'_{l0}(|beta_init_j|)/l0 and
/// wk_j = R'_{l1}(|delta_init_j|)/l1. Coordinates at zero get weight 1,
/// coordinates past the flat region get weight 0.
FeatureWeights lla_feature_weights(const Estimate& init, double lambda0, double lambda1,
                                   PenaltyFamily family, double a = 3.7,
                                   double gamma = 3.0);

}  // namespace adatrans
