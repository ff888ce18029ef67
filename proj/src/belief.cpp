#include "spkg/belief.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

namespace spkg {

namespace {

std::vector<int> mask_indices(const std::vector<bool>& mask) {
  std::vector<int> idx;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) idx.push_back(static_cast<int>(j));
  return idx;
}

}  // namespace

void GaussianBelief::validate() const {
  require_dims(covariance.rows() == mean.size() && covariance.cols() == mean.size(),
               "gaussian belief: mean and covariance dimensions disagree");
  if (!mean.allFinite()) throw NumericalError("gaussian belief: non-finite mean");
  require_psd(covariance, "gaussian belief covariance");
}

void SparsityBelief::validate() const {
  require_dims(xi.size() == eta.size(), "sparsity belief: xi and eta lengths disagree");
  if (!(xi.array() > 0.0).all() || !(eta.array() > 0.0).all() || !xi.allFinite() || !eta.allFinite())
    throw NumericalError("sparsity belief: shape parameters must be finite and strictly positive");
}

SparsityBelief SparsityBelief::uniform(int p, double xi, double eta) {
  return {Vector::Constant(p, xi), Vector::Constant(p, eta)};
}

void BeliefState::validate() const {
  gaussian.validate();
  sparsity.validate();
  require_dims(sparsity.dim() == gaussian.dim(), "belief: sparsity and gaussian dimensions disagree");
  if (!basis) throw DimensionError("belief: missing basis");
  require_dims(basis->features() == gaussian.dim(), "belief: basis column count differs from coefficient count");
  require_dims(basis->intercepts.size() == basis->rows.rows(), "belief: intercept count differs from basis rows");
  require_dims(noise_sd.size() == basis->alternatives(), "belief: one noise level per alternative required");
  if (!(noise_sd.array() > 0.0).all() || !noise_sd.allFinite())
    throw ValidationError("noise_sd", "measurement noise must be finite and strictly positive");
}

BeliefState BeliefState::make(GaussianBelief g, SparsityBelief s, std::shared_ptr<const BasisMatrix> basis,
                              Vector noise_sd) {
  BeliefState b;
  b.gaussian = std::move(g);
  b.sparsity = std::move(s);
  b.basis = std::move(basis);
  if (noise_sd.size() == 1 && b.basis && b.basis->alternatives() != 1)
    noise_sd = Vector::Constant(b.basis->alternatives(), noise_sd(0));
  b.noise_sd = std::move(noise_sd);
  b.validate();
  return b;
}

AlternativeBelief lookup_update(const Vector& mean, const Matrix& cov, const Observation& obs) {
  require_dims(cov.rows() == mean.size() && cov.cols() == mean.size(), "lookup_update: dimension mismatch");
  if (obs.alternative < 0 || obs.alternative >= mean.size())
    throw DimensionError("lookup_update: alternative index out of range");
  if (!std::isfinite(obs.value) || !(obs.noise_sd > 0.0))
    throw ValidationError("observation", "observation value must be finite and noise_sd positive");
  require_psd(cov, "lookup_update covariance");

  const int x = obs.alternative;
  const double denom = obs.noise_sd * obs.noise_sd + cov(x, x);
  const Vector col = cov.col(x);
  AlternativeBelief out;
  out.mean = mean + ((obs.value - mean(x)) / denom) * col;
  out.covariance = symmetrized(cov - (col * col.transpose()) / denom);
  return out;
}

GaussianBelief rls_update(const GaussianBelief& belief, const Vector& phi_row, double y, double noise_sd) {
  require_dims(phi_row.size() == belief.dim(), "rls_update: design row length differs from coefficient count");
  require_dims(belief.covariance.rows() == belief.dim(), "rls_update: covariance dimension mismatch");
  if (!std::isfinite(y)) throw ValidationError("value", "observation value must be finite");
  const Vector sphi = belief.covariance * phi_row;
  const double gamma = noise_sd * noise_sd + phi_row.dot(sphi);
  if (!std::isfinite(gamma) || !(gamma > 0.0)) throw NumericalError("rls_update: gamma must be finite and positive");

  GaussianBelief out;
  const double residual = y - belief.mean.dot(phi_row);
  out.mean = belief.mean + (residual / gamma) * sphi;
  out.covariance = symmetrized(belief.covariance - (sphi * sphi.transpose()) / gamma);
  return out;
}

std::vector<Matrix> batch_covariance_path(const Matrix& cov, const Matrix& rows, std::span<const double> noise_sds) {
  require_dims(rows.cols() == cov.rows() && cov.rows() == cov.cols(), "batch update: dimension mismatch");
  require_dims(static_cast<Index>(noise_sds.size()) == rows.rows(), "batch update: one noise level per row required");
  std::vector<Matrix> path;
  path.reserve(rows.rows() + 1);
  path.push_back(cov);
  for (Index b = 0; b < rows.rows(); ++b) {
    const Matrix& s = path.back();
    const Vector phi = rows.row(b).transpose();
    const Vector sphi = s * phi;
    const double gamma = noise_sds[b] * noise_sds[b] + phi.dot(sphi);
    if (!std::isfinite(gamma) || !(gamma > 0.0)) throw NumericalError("batch update: gamma must be finite and positive");
    path.push_back(symmetrized(s - (sphi * sphi.transpose()) / gamma));
  }
  return path;
}

GaussianBelief batch_rls_update(const GaussianBelief& belief, const Matrix& rows, std::span<const double> values,
                                std::span<const double> noise_sds) {
  if (rows.rows() < 1) throw DimensionError("batch_rls_update: empty batch");
  require_dims(static_cast<Index>(values.size()) == rows.rows(), "batch_rls_update: one value per row required");
  for (double v : values)
    if (!std::isfinite(v)) throw ValidationError("values", "observation value must be finite");

  // Decisions fix the covariance path; observations then drive the means.
  const auto path = batch_covariance_path(belief.covariance, rows, noise_sds);
  Vector mean = belief.mean;
  for (Index b = 0; b < rows.rows(); ++b) {
    const Vector phi = rows.row(b).transpose();
    const Vector sphi = path[b] * phi;
    const double gamma = noise_sds[b] * noise_sds[b] + phi.dot(sphi);
    mean += ((values[b] - mean.dot(phi)) / gamma) * sphi;
  }
  return {std::move(mean), path.back()};
}

BeliefState fuse_lasso_precision(const BeliefState& belief, const Vector& lasso_mean, const Matrix& lasso_precision,
                                 const std::vector<int>& active) {
  const int p = belief.features();
  require_dims(lasso_mean.size() == p, "fuse: lasso estimate length differs from coefficient count");
  const auto k = static_cast<Index>(active.size());
  require_dims(lasso_precision.rows() == k && lasso_precision.cols() == k, "fuse: precision must be |S| x |S|");

  BeliefState out = belief;
  std::vector<bool> in_active(p, false);
  for (int j : active) {
    if (j < 0 || j >= p) throw DimensionError("fuse: active index out of range");
    if (in_active[j]) throw DimensionError("fuse: duplicate active index");
    in_active[j] = true;
  }
  for (int j = 0; j < p; ++j) {
    if (in_active[j])
      out.sparsity.xi(j) += 1.0;
    else
      out.sparsity.eta(j) += 1.0;
  }
  if (active.empty()) return out;

  // (C + P^{-1})^{-1} = L (L^T C L + I)^{-1} L^T with P = L L^T; the middle
  // system has eigenvalues >= 1 even when P is badly conditioned.
  Eigen::LLT<Matrix> chol(symmetrized(lasso_precision));
  if (chol.info() != Eigen::Success) throw NumericalError("fuse: lasso precision is not positive definite");
  const Matrix lower = chol.matrixL();
  const Matrix& cov = belief.gaussian.covariance;
  const Matrix cross = cov(Eigen::all, active);  // p x |S|
  const Matrix c_ss = cross(active, Eigen::all);
  Matrix middle = lower.transpose() * c_ss * lower;
  middle.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> mid(symmetrized(middle));
  if (mid.info() != Eigen::Success) throw NumericalError("fuse: singular precision sum");
  const Matrix gain_core = lower * mid.solve(lower.transpose());  // |S| x |S|

  const Vector innovation = lasso_mean(active) - belief.gaussian.mean(active);
  const Matrix cross_gain = cross * gain_core;  // p x |S|
  out.gaussian.mean = belief.gaussian.mean + cross_gain * innovation;
  out.gaussian.covariance = symmetrized(cov - cross_gain * cross.transpose());
  return out;
}

BeliefState fuse_lasso_sample(const BeliefState& belief, const Vector& lasso_mean, const Matrix& lasso_cov,
                              const std::vector<int>& active) {
  const auto k = static_cast<Index>(active.size());
  require_dims(lasso_cov.rows() == k && lasso_cov.cols() == k, "fuse: lasso covariance must be |S| x |S|");
  if (k == 0) return fuse_lasso_precision(belief, lasso_mean, Matrix(0, 0), active);
  Eigen::LLT<Matrix> chol(symmetrized(lasso_cov));
  if (chol.info() != Eigen::Success) throw NumericalError("fuse: lasso covariance is not positive definite");
  const Matrix precision = chol.solve(Matrix::Identity(k, k));
  return fuse_lasso_precision(belief, lasso_mean, symmetrized(precision), active);
}

double log_pattern_probability(const SparsityBelief& sparsity, const std::vector<bool>& mask) {
  require_dims(static_cast<Index>(mask.size()) == sparsity.xi.size(), "pattern: mask length differs from p");
  double lp = 0.0;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    const double total = sparsity.xi(j) + sparsity.eta(j);
    lp += std::log((mask[j] ? sparsity.xi(j) : sparsity.eta(j)) / total);
  }
  return lp;
}

double pattern_probability(const SparsityBelief& sparsity, const std::vector<bool>& mask) {
  return std::exp(log_pattern_probability(sparsity, mask));
}

std::vector<bool> map_pattern(const SparsityBelief& sparsity) {
  const Vector incl = sparsity.inclusion();
  std::vector<bool> mask(incl.size());
  for (Index j = 0; j < incl.size(); ++j) mask[j] = incl(j) > 0.5;
  return mask;
}

std::vector<SparsityPattern> enumerate_patterns(const SparsityBelief& sparsity, int L, Rng& rng,
                                                const std::vector<bool>& prior_pattern) {
  if (L < 1) throw ValidationError("L", "pattern count must be at least 1");
  const int p = sparsity.dim();
  std::set<std::vector<bool>> candidates;

  if (p < 30 && (std::int64_t{1} << p) <= L) {
    for (std::int64_t code = 0; code < (std::int64_t{1} << p); ++code) {
      std::vector<bool> mask(p);
      for (int j = 0; j < p; ++j) mask[j] = (code >> j) & 1;
      candidates.insert(std::move(mask));
    }
  } else {
    candidates.insert(map_pattern(sparsity));
    if (!prior_pattern.empty()) {
      require_dims(static_cast<int>(prior_pattern.size()) == p, "pattern: prior pattern length differs from p");
      candidates.insert(prior_pattern);
    }
    const Vector incl = sparsity.inclusion();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const long max_attempts = 50L * L;
    for (long attempt = 0; attempt < max_attempts && static_cast<int>(candidates.size()) < L; ++attempt) {
      std::vector<bool> mask(p);
      for (int j = 0; j < p; ++j) mask[j] = unif(rng) < incl(j);
      candidates.insert(std::move(mask));
    }
  }

  std::vector<std::pair<double, std::vector<bool>>> scored;
  scored.reserve(candidates.size());
  for (const auto& m : candidates) scored.emplace_back(log_pattern_probability(sparsity, m), m);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (static_cast<int>(scored.size()) > L) scored.resize(L);

  const double top = scored.front().first;
  double total = 0.0;
  for (const auto& s : scored) total += std::exp(s.first - top);
  std::vector<SparsityPattern> out;
  out.reserve(scored.size());
  for (auto& s : scored) out.push_back({std::move(s.second), std::exp(s.first - top) / total});
  return out;
}

Vector mixture_mean(const Vector& mean, const std::vector<SparsityPattern>& patterns) {
  Vector inclusion = Vector::Zero(mean.size());
  for (const auto& pat : patterns) {
    if (static_cast<Index>(pat.mask.size()) != mean.size()) throw ValidationError("patterns", "mask length differs from the coefficient count");
    for (Index j = 0; j < mean.size(); ++j)
      if (pat.mask[j]) inclusion(j) += pat.weight;
  }
  return mean.cwiseProduct(inclusion);
}

AlternativeBelief project_to_alternatives(const GaussianBelief& g, const BasisMatrix& basis,
                                          const std::vector<bool>* mask) {
  require_dims(basis.features() == g.dim(), "project: basis column count differs from coefficient count");
  AlternativeBelief out;
  if (mask == nullptr) {
    out.mean = basis.rows * g.mean + basis.intercepts;
    out.covariance = symmetrized(basis.rows * g.covariance * basis.rows.transpose());
    return out;
  }
  require_dims(static_cast<int>(mask->size()) == g.dim(), "project: mask length differs from coefficient count");
  const auto idx = mask_indices(*mask);
  const Index m = basis.alternatives();
  if (idx.empty()) {
    out.mean = basis.intercepts;
    out.covariance = Matrix::Zero(m, m);
    return out;
  }
  const Matrix phi_s = basis.rows(Eigen::all, idx);
  out.mean = phi_s * g.mean(idx) + basis.intercepts;
  out.covariance = symmetrized(phi_s * g.covariance(idx, idx) * phi_s.transpose());
  return out;
}

AlternativeBelief project_to_alternatives(const BeliefState& belief, const SparsityPattern* mask) {
  if (!belief.basis) throw DimensionError("project: belief has no basis");
  return project_to_alternatives(belief.gaussian, *belief.basis, mask ? &mask->mask : nullptr);
}

}  // namespace spkg
