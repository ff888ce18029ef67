#include "spkg/learner.hpp"

#include <cmath>

namespace spkg {

LearnerState make_learner(BeliefState prior, std::vector<bool> prior_pattern, const LearnerConfig& config, Rng& rng) {
  if (config.L < 1) throw ValidationError("L", "L must be at least 1");
  if (!(config.lambda_scale >= 0.0)) throw ValidationError("lambda_scale", "lambda scale must be nonnegative");
  prior.validate();
  if (!prior_pattern.empty() && static_cast<int>(prior_pattern.size()) != prior.features())
    throw DimensionError("prior pattern length differs from p");
  LearnerState s;
  s.lasso = LassoState::empty(prior.features(), lambda_schedule(0, prior.features(), prior.noise_sd(0), config.lambda_scale));
  s.patterns = enumerate_patterns(prior.sparsity, config.L, rng, prior_pattern);
  s.prior_pattern = std::move(prior_pattern);
  s.belief = std::move(prior);
  return s;
}

double learner_noise_sd(const LearnerState& state) {
  const int n = state.lasso.observations();
  return n ? std::sqrt(state.noise_ss / n) : state.belief.noise_sd(0);
}

ObserveReport learner_observe(LearnerState& state, std::span<const Observation> batch, const LearnerConfig& config,
                              Rng& rng) {
  if (batch.empty()) throw ValidationError("observations", "empty observation batch");
  const int p = state.belief.features();
  const BasisMatrix& basis = *state.belief.basis;
  ObserveReport report;
  for (const auto& obs : batch) {
    if (obs.alternative < 0 || obs.alternative >= basis.alternatives())
      throw ValidationError("probe", "observation refers to an alternative outside the library");
    if (!(obs.noise_sd > 0.0) || !std::isfinite(obs.noise_sd))
      throw ValidationError("noise_sd", "observation noise must be positive");
    if (!std::isfinite(obs.value)) throw ValidationError("value", "observation value must be finite");
    const int n = state.lasso.observations();
    const double lam = lambda_schedule(n, p, obs.noise_sd, config.lambda_scale);
    const Vector row = basis.rows.row(obs.alternative).transpose();
    state.lasso = homotopy_update(state.lasso, row, obs.value - basis.intercepts(obs.alternative), lam);
    state.noise_ss += obs.noise_sd * obs.noise_sd;
    if (state.lasso.fallback) {
      ++state.fallbacks;
      report.fallback = true;
    }
  }
  const Matrix precision =
      state.lasso.active.empty() ? Matrix(0, 0) : precision_estimate(state.lasso, learner_noise_sd(state));
  state.belief = fuse_lasso_precision(state.belief, state.lasso.estimate, precision, state.lasso.active);
  state.patterns = enumerate_patterns(state.belief.sparsity, config.L, rng, state.prior_pattern);
  report.active = state.lasso.active;
  report.lambda = state.lasso.lambda;
  return report;
}

}  // namespace spkg
