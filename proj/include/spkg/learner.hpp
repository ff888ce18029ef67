#pragma once

// The sparse learning loop shared by the simulator and the advisor service:
// each observation advances the Lasso by homotopy, the Lasso estimate is
// fused into the belief with its sampling precision, and the sparsity
// patterns are refreshed.

#include <span>
#include <vector>

#include "spkg/belief.hpp"
#include "spkg/lasso.hpp"

namespace spkg {

struct LearnerConfig {
  int L = 20;
  double lambda_scale = 0.5;
};

struct LearnerState {
  BeliefState belief;
  LassoState lasso;
  std::vector<SparsityPattern> patterns;
  std::vector<bool> prior_pattern;  // footprinting support, always offered to the pattern search
  double noise_ss = 0.0;            // sum of squared observation noise, for the Lasso covariance
  int fallbacks = 0;                // homotopy updates that re-solved from scratch
};

/// Fresh learner on `prior`; patterns are enumerated immediately.
LearnerState make_learner(BeliefState prior, std::vector<bool> prior_pattern, const LearnerConfig& config, Rng& rng);

struct ObserveReport {
  bool fallback = false;
  std::vector<int> active;
  double lambda = 0.0;
};

/// Feeds a batch of observations (one or more) and fuses once at the end.
/// Values are raw measurements; basis intercepts are subtracted before the Lasso sees them.
ObserveReport learner_observe(LearnerState& state, std::span<const Observation> batch, const LearnerConfig& config,
                              Rng& rng);

/// RMS of recorded observation noise; noise of alternative 0 before any observation.
double learner_noise_sd(const LearnerState& state);

}  // namespace spkg
