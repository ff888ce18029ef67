#pragma once

// Belief states over accessibility coefficients and the Bayesian updates that
// advance them: lookup-table (alternative space), recursive least squares
// (coefficient space, single and batch) and fusion of a Lasso sample into the
// joint Gaussian / Beta-Bernoulli belief.

#include <memory>
#include <span>
#include <vector>

#include "spkg/linalg.hpp"
#include "spkg/rng.hpp"

namespace spkg {

/// M x p map from coefficient space to alternative space, plus a fixed
/// per-alternative shift (zero unless supplied by an override file).
struct BasisMatrix {
  Matrix rows;
  Vector intercepts;

  BasisMatrix() = default;
  explicit BasisMatrix(Matrix r) : rows(std::move(r)), intercepts(Vector::Zero(rows.rows())) {}
  BasisMatrix(Matrix r, Vector b) : rows(std::move(r)), intercepts(std::move(b)) {}

  int alternatives() const { return static_cast<int>(rows.rows()); }
  int features() const { return static_cast<int>(rows.cols()); }
};

struct GaussianBelief {
  Vector mean;
  Matrix covariance;

  int dim() const { return static_cast<int>(mean.size()); }
  /// Checks dimensions, symmetry (1e-9) and PSD (-1e-8).
  void validate() const;
};

/// Independent Beta(xi_j, eta_j) beliefs on the inclusion probability of each coefficient.
struct SparsityBelief {
  Vector xi;
  Vector eta;

  int dim() const { return static_cast<int>(xi.size()); }
  Vector inclusion() const { return xi.array() / (xi.array() + eta.array()); }
  void validate() const;

  static SparsityBelief uniform(int p, double xi = 1.0, double eta = 1.0);
};

struct BeliefState {
  GaussianBelief gaussian;
  SparsityBelief sparsity;
  std::shared_ptr<const BasisMatrix> basis;
  Vector noise_sd;  // one per alternative

  int features() const { return gaussian.dim(); }
  int alternatives() const { return basis ? basis->alternatives() : 0; }
  void validate() const;

  /// Validated construction; `noise_sd` is broadcast when it has a single entry.
  static BeliefState make(GaussianBelief g, SparsityBelief s, std::shared_ptr<const BasisMatrix> basis,
                          Vector noise_sd);
};

struct Observation {
  int alternative = 0;
  double value = 0.0;
  double noise_sd = 1.0;
};

struct SparsityPattern {
  std::vector<bool> mask;
  double weight = 1.0;
};

/// Mean and covariance over alternatives.
struct AlternativeBelief {
  Vector mean;
  Matrix covariance;
};

AlternativeBelief lookup_update(const Vector& mean, const Matrix& cov, const Observation& obs);

GaussianBelief rls_update(const GaussianBelief& belief, const Vector& phi_row, double y, double noise_sd);

/// Covariance advances per row regardless of the observed values; means are
/// formed once all values of the batch are known. `rows` is B x p.
GaussianBelief batch_rls_update(const GaussianBelief& belief, const Matrix& rows, std::span<const double> values,
                                std::span<const double> noise_sds);

/// Covariance part of batch_rls_update alone: the sequence Sigma^0 .. Sigma^B.
std::vector<Matrix> batch_covariance_path(const Matrix& cov, const Matrix& rows, std::span<const double> noise_sds);

/// Treats a Lasso estimate on `active` as a Gaussian sample with covariance
/// `lasso_cov` (|S| x |S|) and fuses it with the current belief. On the active
/// block the result is the precision-weighted combination; coordinates off the
/// active set move only through their prior correlation with it. Beta
/// counters: xi_j += 1 on the active set, eta_j += 1 elsewhere. An empty
/// active set leaves the Gaussian part untouched.
BeliefState fuse_lasso_sample(const BeliefState& belief, const Vector& lasso_mean, const Matrix& lasso_cov,
                              const std::vector<int>& active);

/// Same as fuse_lasso_sample but takes the sample precision (inverse covariance) directly.
BeliefState fuse_lasso_precision(const BeliefState& belief, const Vector& lasso_mean, const Matrix& lasso_precision,
                                 const std::vector<int>& active);

double pattern_probability(const SparsityBelief& sparsity, const std::vector<bool>& mask);
double log_pattern_probability(const SparsityBelief& sparsity, const std::vector<bool>& mask);

/// Inclusion probabilities thresholded at 0.5.
std::vector<bool> map_pattern(const SparsityBelief& sparsity);

/// Up to L distinct high-probability sparsity patterns with weights renormalized
/// to one. When 2^p <= L every pattern is listed. Otherwise the candidates are
/// the MAP pattern, `prior_pattern` (if non-empty) and independent Bernoulli
/// draws until L distinct or 50 L attempts; the top L by weight are kept.
std::vector<SparsityPattern> enumerate_patterns(const SparsityBelief& sparsity, int L, Rng& rng,
                                                const std::vector<bool>& prior_pattern = {});

/// Expected coefficients under the pattern mixture: vartheta_j times the total
/// weight of the patterns that include j.
Vector mixture_mean(const Vector& mean, const std::vector<SparsityPattern>& patterns);

/// theta = Phi (mask . vartheta) + intercepts, Sigma = Phi_mask Sigma_mask Phi_mask^T.
AlternativeBelief project_to_alternatives(const GaussianBelief& g, const BasisMatrix& basis,
                                          const std::vector<bool>* mask = nullptr);
AlternativeBelief project_to_alternatives(const BeliefState& belief, const SparsityPattern* mask = nullptr);

}  // namespace spkg
