#include "spkg/kg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spkg {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kScoreFloor = 1e-12;

void check_direction_denominator(const Matrix& cov, const Vector& noise_sds) {
  for (Index x = 0; x < cov.rows(); ++x) {
    const double d = noise_sds(x) * noise_sds(x) + cov(x, x);
    if (!(d > 0.0) || !std::isfinite(d)) throw NumericalError("sigma_tilde: nonpositive predictive variance");
  }
}

// Unchecked sigma_tilde for use inside parallel regions.
inline void direction_into(const Matrix& cov, int x, double noise_sd, Vector& out) {
  out = cov.col(x) / std::sqrt(noise_sd * noise_sd + cov(x, x));
}

std::vector<McEstimate> summarize(const Matrix& acc) {
  const Index Q = acc.rows();
  std::vector<McEstimate> out(acc.cols());
  for (Index x = 0; x < acc.cols(); ++x) {
    const double mean = acc.col(x).mean();
    double ss = 0.0;
    for (Index q = 0; q < Q; ++q) ss += (acc(q, x) - mean) * (acc(q, x) - mean);
    const double var = Q > 1 ? ss / static_cast<double>(Q - 1) : 0.0;
    out[x] = {mean, std::sqrt(var / static_cast<double>(Q))};
  }
  return out;
}

void check_contexts(const std::vector<McContext>& contexts, const Vector& noise_sds, const Matrix& normals) {
  if (normals.rows() < 1 || normals.cols() < 1) throw DimensionError("mc_sweep: empty normal draws");
  for (const auto& c : contexts) {
    require_dims(c.mean.size() == noise_sds.size() && c.cov.rows() == c.mean.size() && c.cov.cols() == c.mean.size(),
                 "mc_sweep: context dimensions disagree");
    require_dims(static_cast<Index>(c.directions.size()) + 1 == normals.cols(),
                 "mc_sweep: normal draws need one column per fixed decision plus the candidate");
    for (const auto& d : c.directions) require_dims(d.size() == c.mean.size(), "mc_sweep: direction length");
    check_direction_denominator(c.cov, noise_sds);
  }
}

// Fixes `x` as the next decision in every context: records its update
// direction and advances the covariance (value-independent).
void advance_contexts(std::vector<McContext>& contexts, const Vector& noise_sds, int x) {
  for (auto& c : contexts) {
    Vector dir = sigma_tilde(c.cov, x, noise_sds(x));
    c.cov = symmetrized(c.cov - dir * dir.transpose());
    c.directions.push_back(std::move(dir));
  }
}

BatchDecision greedy_batch(std::vector<McContext> contexts, const Vector& noise_sds, int first, double first_score,
                           int B, int Q, Rng& rng) {
  BatchDecision out;
  out.alternatives.push_back(first);
  out.per_step_scores.push_back(first_score);
  out.mc_standard_errors.push_back(0.0);
  advance_contexts(contexts, noise_sds, first);
  for (int b = 1; b < B; ++b) {
    const Matrix normals = draw_normals(Q, b + 1, rng);
    const auto values = mc_sweep(contexts, noise_sds, normals);
    int best = 0;
    for (std::size_t x = 1; x < values.size(); ++x)
      if (values[x].value > values[best].value) best = static_cast<int>(x);
    out.alternatives.push_back(best);
    out.per_step_scores.push_back(std::max(values[best].value, 0.0));
    out.mc_standard_errors.push_back(values[best].standard_error);
    advance_contexts(contexts, noise_sds, best);
  }
  return out;
}

std::vector<McContext> pattern_contexts(const BeliefState& belief, const std::vector<SparsityPattern>& patterns) {
  std::vector<McContext> contexts;
  for (const auto& pat : patterns) {
    if (pat.weight == 0.0) continue;
    auto proj = project_to_alternatives(belief, &pat);
    contexts.push_back({std::move(proj.mean), std::move(proj.covariance), {}, pat.weight});
  }
  return contexts;
}

void check_patterns(const BeliefState& belief, const std::vector<SparsityPattern>& patterns) {
  if (patterns.empty()) throw ValidationError("patterns", "at least one sparsity pattern is required");
  double total = 0.0;
  for (const auto& p : patterns) {
    require_dims(static_cast<int>(p.mask.size()) == belief.features(), "pattern mask length differs from p");
    if (!(p.weight >= 0.0)) throw ValidationError("patterns", "pattern weights must be nonnegative");
    total += p.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("patterns", "pattern weights must sum to 1");
}

}  // namespace

double normal_loss(double z) {
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * z * z);
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  return std::max(z * cdf + pdf, 0.0);
}

double h_function(const Vector& a, const Vector& b) {
  require_dims(a.size() == b.size(), "h_function: a and b lengths differ");
  const Index m = a.size();
  if (m == 0) throw DimensionError("h_function: empty input");
  if (m == 1) return 0.0;

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return b(i) < b(j) || (b(i) == b(j) && a(i) < a(j)); });

  // Equal slopes: only the largest intercept can be on the envelope.
  std::vector<int> lines;
  lines.reserve(m);
  for (int i : order) {
    if (!lines.empty() && b(lines.back()) == b(i))
      lines.back() = i;
    else
      lines.push_back(i);
  }

  // Upper envelope; cuts[k] is where lines kept[k-1] and kept[k] cross.
  std::vector<int> kept;
  std::vector<double> cuts;
  for (int i : lines) {
    double cut = -std::numeric_limits<double>::infinity();
    while (!kept.empty()) {
      const int j = kept.back();
      cut = (a(j) - a(i)) / (b(i) - b(j));
      if (kept.size() > 1 && cut <= cuts.back()) {
        kept.pop_back();
        cuts.pop_back();
        continue;
      }
      break;
    }
    kept.push_back(i);
    cuts.push_back(kept.size() == 1 ? -std::numeric_limits<double>::infinity() : cut);
  }

  double h = 0.0;
  for (std::size_t k = 1; k < kept.size(); ++k)
    h += (b(kept[k]) - b(kept[k - 1])) * normal_loss(-std::abs(cuts[k]));
  return std::max(h, 0.0);
}

Vector sigma_tilde(const Matrix& cov, int x, double noise_sd) {
  require_dims(cov.rows() == cov.cols(), "sigma_tilde: covariance must be square");
  if (x < 0 || x >= cov.rows()) throw DimensionError("sigma_tilde: alternative index out of range");
  const double denom = noise_sd * noise_sd + cov(x, x);
  if (!(denom > 0.0) || !std::isfinite(denom)) throw NumericalError("sigma_tilde: nonpositive denominator");
  return cov.col(x) / std::sqrt(denom);
}

KGScores make_scores(Vector raw) {
  KGScores out;
  for (Index i = 0; i < raw.size(); ++i)
    if (raw(i) < kScoreFloor) raw(i) = 0.0;
  out.argmax = argmax_lowest(raw);
  const double top = raw(out.argmax);
  out.tie = (raw.array() == top).count() > 1;
  out.scores = std::move(raw);
  return out;
}

KGScores kg_lookup(const Vector& mean, const Matrix& cov, const Vector& noise_sds) {
  const Index m = mean.size();
  require_dims(cov.rows() == m && cov.cols() == m && noise_sds.size() == m, "kg_lookup: dimension mismatch");
  check_direction_denominator(cov, noise_sds);
  Vector raw(m);
#pragma omp parallel if (m >= 64)
  {
    Vector dir(m);
#pragma omp for schedule(static)
    for (Index x = 0; x < m; ++x) {
      direction_into(cov, static_cast<int>(x), noise_sds(x), dir);
      raw(x) = h_function(mean, dir);
    }
  }
  return make_scores(std::move(raw));
}

KGScores kg_linear(const GaussianBelief& belief, const BasisMatrix& basis, const Vector& noise_sds) {
  const auto proj = project_to_alternatives(belief, basis);
  return kg_lookup(proj.mean, proj.covariance, noise_sds);
}

KGScores spkg_scores(const BeliefState& belief, const std::vector<SparsityPattern>& patterns) {
  check_patterns(belief, patterns);
  Vector total = Vector::Zero(belief.alternatives());
  for (const auto& pat : patterns) {
    if (pat.weight == 0.0) continue;
    const auto proj = project_to_alternatives(belief, &pat);
    total += pat.weight * kg_lookup(proj.mean, proj.covariance, belief.noise_sd).scores;
  }
  return make_scores(std::move(total));
}

Matrix draw_normals(int Q, int cols, Rng& rng) {
  if (Q < 1 || cols < 1) throw ValidationError("Q", "Monte Carlo sample count must be positive");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(Q, cols);
  for (int q = 0; q < Q; ++q)
    for (int j = 0; j < cols; ++j) z(q, j) = normal(rng);
  return z;
}

std::vector<McEstimate> mc_sweep(const std::vector<McContext>& contexts, const Vector& noise_sds,
                                 const Matrix& normals) {
  check_contexts(contexts, noise_sds, normals);
  const Index m = noise_sds.size();
  const Index Q = normals.rows();
  const Index last = normals.cols() - 1;
  Matrix acc = Matrix::Zero(Q, m);

  for (const auto& ctx : contexts) {
    if (ctx.weight == 0.0) continue;
    // base(:, q) = theta + sum_j dir_j z_qj, shared by every candidate.
    Matrix base = ctx.mean.replicate(1, Q);
    for (std::size_t j = 0; j < ctx.directions.size(); ++j)
      base.noalias() += ctx.directions[j] * normals.col(static_cast<Index>(j)).transpose();
    const double top = ctx.mean.maxCoeff();
    const double w = ctx.weight;

#pragma omp parallel
    {
      Vector dir(m);
#pragma omp for schedule(dynamic, 4)
      for (Index x = 0; x < m; ++x) {
        direction_into(ctx.cov, static_cast<int>(x), noise_sds(x), dir);
        for (Index q = 0; q < Q; ++q) {
          const double z = normals(q, last);
          const double* col = base.col(q).data();
          double best = -std::numeric_limits<double>::infinity();
          for (Index i = 0; i < m; ++i) best = std::max(best, col[i] + dir(i) * z);
          acc(q, x) += w * (best - top);
        }
      }
    }
  }
  return summarize(acc);
}

McEstimate mc_kg(const std::vector<Vector>& context, int candidate, const Vector& mean, const Matrix& cov,
                 const Vector& noise_sds, int Q, Rng& rng) {
  if (Q < 2) throw ValidationError("Q", "mc_kg needs Q >= 2");
  if (candidate < 0 || candidate >= mean.size()) throw DimensionError("mc_kg: candidate index out of range");
  const Matrix normals = draw_normals(Q, static_cast<int>(context.size()) + 1, rng);
  std::vector<McContext> ctx{{mean, cov, context, 1.0}};
  check_contexts(ctx, noise_sds, normals);
  const Vector dir = sigma_tilde(cov, candidate, noise_sds(candidate));
  const double top = mean.maxCoeff();
  Matrix acc(Q, 1);
  for (int q = 0; q < Q; ++q) {
    Vector theta = mean + dir * normals(q, static_cast<Index>(context.size()));
    for (std::size_t j = 0; j < context.size(); ++j) theta += context[j] * normals(q, static_cast<Index>(j));
    acc(q, 0) = theta.maxCoeff() - top;
  }
  return summarize(acc).front();
}

BatchDecision batch_kg_select(const Vector& mean, const Matrix& cov, const Vector& noise_sds, int B, int Q, Rng& rng) {
  if (B < 1) throw ValidationError("B", "batch size must be at least 1");
  if (B > 1 && Q < 2) throw ValidationError("Q", "Monte Carlo sample count must be at least 2");
  const auto first = kg_lookup(mean, cov, noise_sds);
  std::vector<McContext> contexts{{mean, cov, {}, 1.0}};
  return greedy_batch(std::move(contexts), noise_sds, first.argmax, first.scores(first.argmax), B, Q, rng);
}

BatchDecision batch_spkg_select(const BeliefState& belief, const std::vector<SparsityPattern>& patterns, int B, int Q,
                                Rng& rng) {
  if (B < 1) throw ValidationError("B", "batch size must be at least 1");
  if (B > 1 && Q < 2) throw ValidationError("Q", "Monte Carlo sample count must be at least 2");
  const auto first = spkg_scores(belief, patterns);
  // Covariances advance in alternative space; Phi S' Phi^T after the
  // coefficient-space update equals the lookup-form update of Phi S Phi^T.
  return greedy_batch(pattern_contexts(belief, patterns), belief.noise_sd, first.argmax, first.scores(first.argmax), B,
                      Q, rng);
}

std::vector<McEstimate> batch_spkg_candidate_values(const BeliefState& belief,
                                                    const std::vector<SparsityPattern>& patterns,
                                                    const std::vector<int>& fixed, int Q, Rng& rng) {
  check_patterns(belief, patterns);
  auto contexts = pattern_contexts(belief, patterns);
  for (int x : fixed) {
    if (x < 0 || x >= belief.alternatives()) throw DimensionError("fixed decision out of range");
    advance_contexts(contexts, belief.noise_sd, x);
  }
  const Matrix normals = draw_normals(Q, static_cast<int>(fixed.size()) + 1, rng);
  return mc_sweep(contexts, belief.noise_sd, normals);
}

BatchDecision exploration_select(int M, int B, Rng& rng) {
  if (M < 1) throw ValidationError("M", "need at least one alternative");
  if (B < 1) throw ValidationError("B", "batch size must be at least 1");
  BatchDecision out;
  if (B <= M) {
    std::vector<int> pool(M);
    std::iota(pool.begin(), pool.end(), 0);
    for (int b = 0; b < B; ++b) {
      std::uniform_int_distribution<int> pick(b, M - 1);
      std::swap(pool[b], pool[pick(rng)]);
      out.alternatives.push_back(pool[b]);
    }
  } else {
    std::uniform_int_distribution<int> pick(0, M - 1);
    for (int b = 0; b < B; ++b) out.alternatives.push_back(pick(rng));
  }
  out.per_step_scores.assign(B, 0.0);
  out.mc_standard_errors.assign(B, 0.0);
  return out;
}

}  // namespace spkg
