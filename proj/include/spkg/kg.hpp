#pragma once

// Knowledge-gradient decision rules over discrete alternatives.
//
// All scores are expected increments of the believed-best value,
//   E[max_x theta^{n+1}_x] - max_x theta^n_x,
// computed exactly via the expected maximum of lines h(a, b) for single
// measurements and by Monte Carlo for greedy batch construction.

#include <vector>

#include "spkg/belief.hpp"
#include "spkg/linalg.hpp"
#include "spkg/rng.hpp"

namespace spkg {

struct KGScores {
  Vector scores;
  int argmax = 0;
  bool tie = false;  // more than one alternative attains the maximum
};

struct BatchDecision {
  std::vector<int> alternatives;
  std::vector<double> per_step_scores;
  std::vector<double> mc_standard_errors;
};

struct McEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// f(z) = z Phi(z) + phi(z).
double normal_loss(double z);

/// E[max_i (a_i + b_i Z)] - max_i a_i for standard normal Z, O(M log M).
double h_function(const Vector& a, const Vector& b);

/// Sigma e_x / sqrt(sigma_x^2 + Sigma_xx).
Vector sigma_tilde(const Matrix& cov, int x, double noise_sd);

/// Wraps raw scores: clamps values below 1e-12 to zero and picks the lowest-index maximum.
KGScores make_scores(Vector raw);

KGScores kg_lookup(const Vector& mean, const Matrix& cov, const Vector& noise_sds);
KGScores kg_linear(const GaussianBelief& belief, const BasisMatrix& basis, const Vector& noise_sds);

/// Pattern-weighted KG: sum_l w_l h(a^l, b^l_x) with a^l, b^l from the pattern-masked basis and belief.
KGScores spkg_scores(const BeliefState& belief, const std::vector<SparsityPattern>& patterns);

/// One Monte Carlo evaluation context: the belief at the start of a batch,
/// the update directions of the decisions already fixed in the batch, and the
/// covariance after those decisions.
struct McContext {
  Vector mean;
  Matrix cov;
  std::vector<Vector> directions;
  double weight = 1.0;
};

/// Value of adding each alternative to the fixed decisions of every context,
/// weighted across contexts. `normals` is Q x (b + 1) with b = number of
/// fixed decisions; the same draws serve every candidate and context.
/// Candidates are evaluated in parallel.
std::vector<McEstimate> mc_sweep(const std::vector<McContext>& contexts, const Vector& noise_sds,
                                 const Matrix& normals);

/// Q x cols matrix of standard normal draws.
Matrix draw_normals(int Q, int cols, Rng& rng);

/// Monte Carlo estimate of the batch value of {fixed decisions} + candidate.
McEstimate mc_kg(const std::vector<Vector>& context, int candidate, const Vector& mean, const Matrix& cov,
                 const Vector& noise_sds, int Q, Rng& rng);

/// Greedy batch on a lookup-table belief: the first pick maximizes kg_lookup,
/// later picks maximize the Monte Carlo batch value given earlier picks.
BatchDecision batch_kg_select(const Vector& mean, const Matrix& cov, const Vector& noise_sds, int B, int Q, Rng& rng);

/// Greedy batch on the sparse belief; sparsity weights are held fixed within the batch.
BatchDecision batch_spkg_select(const BeliefState& belief, const std::vector<SparsityPattern>& patterns, int B, int Q,
                                Rng& rng);

/// Pattern-weighted Monte Carlo values of every candidate as the next pick after
/// `fixed` (the decisions already in the batch). Exposed for diagnostics and tests.
std::vector<McEstimate> batch_spkg_candidate_values(const BeliefState& belief,
                                                    const std::vector<SparsityPattern>& patterns,
                                                    const std::vector<int>& fixed, int Q, Rng& rng);

/// B uniform picks, without replacement when B <= M.
BatchDecision exploration_select(int M, int B, Rng& rng);

namespace reference {

// Straightforward serial versions of the parallel kernels, kept as test oracles
// and benchmark baselines.
KGScores kg_lookup(const Vector& mean, const Matrix& cov, const Vector& noise_sds);
std::vector<McEstimate> mc_sweep(const std::vector<McContext>& contexts, const Vector& noise_sds,
                                 const Matrix& normals);

}  // namespace reference

}  // namespace spkg
