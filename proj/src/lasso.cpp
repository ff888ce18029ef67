#include "spkg/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace spkg {

namespace {

constexpr double kStepEps = 1e-13;

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void set_active_from_estimate(LassoState& s) {
  s.active.clear();
  s.signs.clear();
  for (int j = 0; j < s.features(); ++j) {
    if (s.estimate(j) != 0.0) {
      s.active.push_back(j);
      s.signs.push_back(s.estimate(j) > 0 ? 1 : -1);
    }
  }
}

// Solves the KKT system on (active, signs). Returns nullopt if the Gram matrix is
// numerically singular or the solution disagrees with the assumed signs.
std::optional<Vector> solve_on_active(const Matrix& x, const Vector& y, double lambda, const std::vector<int>& active,
                                      const std::vector<int>& signs) {
  const int p = static_cast<int>(x.cols());
  Vector beta = Vector::Zero(p);
  if (active.empty()) return beta;
  const Matrix xa = x(Eigen::all, active);
  const Matrix gram = xa.transpose() * xa;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const double scale = std::max(gram.diagonal().maxCoeff(), 1e-300);
  if (ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-11 * scale) return std::nullopt;
  Vector s(active.size());
  for (std::size_t i = 0; i < signs.size(); ++i) s(i) = signs[i];
  const Vector ba = ldlt.solve(xa.transpose() * y - lambda * s);
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (ba(i) * s(i) < 0.0) return std::nullopt;
    beta(active[i]) = ba(i);
  }
  return beta;
}

// Moves beta along null directions of the active columns until they are
// linearly independent. The fit is unchanged and the l1 norm does not grow,
// so a minimizer stays a minimizer; used when the solution is not unique.
void reduce_to_basic(const Matrix& x, Vector& beta) {
  for (int guard = 0; guard < static_cast<int>(beta.size()); ++guard) {
    std::vector<int> active;
    for (int j = 0; j < beta.size(); ++j)
      if (beta(j) != 0.0) active.push_back(j);
    if (active.empty()) return;
    const Matrix xa = x(Eigen::all, active);
    Eigen::JacobiSVD<Matrix> svd(xa, Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    const double tol = 1e-10 * std::max(sv.size() ? sv(0) : 0.0, 1e-300);
    const auto k = static_cast<Index>(active.size());
    Index rank = 0;
    while (rank < sv.size() && sv(rank) > tol) ++rank;
    if (rank == k) return;
    Vector d = svd.matrixV().col(k - 1);
    double slope = 0.0;
    for (Index i = 0; i < k; ++i) slope += (beta(active[i]) > 0 ? 1.0 : -1.0) * d(i);
    if (slope > 0.0) d = -d;
    double step = std::numeric_limits<double>::infinity();
    Index hit = -1;
    for (Index i = 0; i < k; ++i) {
      const double b = beta(active[i]);
      if (d(i) != 0.0 && (b > 0) != (d(i) > 0) && std::abs(b / d(i)) < step) {
        step = std::abs(b / d(i));
        hit = i;
      }
    }
    if (hit < 0) return;
    for (Index i = 0; i < k; ++i) beta(active[i]) += step * d(i);
    beta(active[hit]) = 0.0;
  }
}

// Exact solution on the support of `beta`, returned only when it passes the KKT check.
std::optional<LassoState> certify(const Matrix& x, const Vector& y, double lambda, Vector beta) {
  reduce_to_basic(x, beta);
  LassoState s;
  s.design = x;
  s.responses = y;
  s.lambda = lambda;
  s.estimate = beta;
  set_active_from_estimate(s);
  auto exact = solve_on_active(x, y, lambda, s.active, s.signs);
  if (!exact) return std::nullopt;
  s.estimate = *exact;
  set_active_from_estimate(s);
  if (kkt_violation(s) > 1e-9 * std::max(1.0, lambda)) return std::nullopt;
  return s;
}

}  // namespace

LassoState LassoState::empty(int p, double lambda) {
  LassoState s;
  s.design = Matrix(0, p);
  s.responses = Vector(0);
  s.estimate = Vector::Zero(p);
  s.lambda = lambda;
  return s;
}

double kkt_violation(const LassoState& state) {
  const int p = state.features();
  require_dims(state.design.cols() == p && state.design.rows() == state.responses.size(),
               "lasso state: design and response dimensions disagree");
  std::vector<bool> listed(p, false);
  for (int j : state.active) listed[j] = true;
  const Vector grad = state.design.transpose() * (state.responses - state.design * state.estimate);
  double worst = 0.0;
  for (int j = 0; j < p; ++j) {
    const double b = state.estimate(j);
    if (b != 0.0) {
      if (!listed[j]) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, std::abs(grad(j) - state.lambda * (b > 0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(grad(j)) - state.lambda);
    }
  }
  return std::max(worst, 0.0);
}

LassoState lasso_solve(const Matrix& design, const Vector& responses, double lambda, const LassoOptions& opts) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda", "lambda must be finite and >= 0");
  require_dims(design.rows() == responses.size(), "lasso_solve: design rows differ from response count");
  if (design.rows() < 1) throw ValidationError("design", "lasso_solve needs at least one observation");
  const int p = static_cast<int>(design.cols());

  LassoState out;
  out.design = design;
  out.responses = responses;
  out.lambda = lambda;
  out.estimate = Vector::Zero(p);

  const Vector col_sq = design.colwise().squaredNorm().transpose();
  Vector beta = Vector::Zero(p);
  Vector resid = responses;
  const double y_sq = 0.5 * responses.squaredNorm();
  const double gap_tol = opts.gap_tolerance * std::max(1.0, y_sq);
  const double grad_scale = 1.0 + (design.transpose() * responses).cwiseAbs().maxCoeff();

  bool converged = false;
  double last_gap = std::numeric_limits<double>::infinity();
  int next_polish = 16;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    // Ill-conditioned or degenerate designs make coordinate descent crawl;
    // an exact solve on the current support usually finishes the job.
    if (sweep == next_polish && lambda > 0.0) {
      next_polish = std::min(2 * next_polish, next_polish + 1024);
      if (auto done = certify(design, responses, lambda, beta)) return *done;
    }
    for (int j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double old = beta(j);
      const double z = design.col(j).dot(resid) + col_sq(j) * old;
      const double updated = soft_threshold(z, lambda) / col_sq(j);
      if (updated != old) {
        resid -= (updated - old) * design.col(j);
        beta(j) = updated;
      }
    }
    const Vector grad = design.transpose() * resid;
    const double gmax = grad.cwiseAbs().maxCoeff();
    if (lambda == 0.0) {
      last_gap = gmax;
      if (gmax <= 1e-12 * grad_scale) {
        converged = true;
        break;
      }
      continue;
    }
    const double primal = 0.5 * resid.squaredNorm() + lambda * beta.lpNorm<1>();
    const double scale = gmax > lambda ? lambda / gmax : 1.0;
    const double dual = y_sq - 0.5 * (responses - scale * resid).squaredNorm();
    last_gap = primal - dual;
    if (last_gap <= gap_tol) {
      converged = true;
      break;
    }
  }
  if (!converged && lambda > 0.0)
    if (auto done = certify(design, responses, lambda, beta)) return *done;
  if (!converged)
    throw NumericalError("lasso_solve: no convergence within the sweep cap; duality gap " + std::to_string(last_gap));

  if (lambda > 0.0)
    if (auto done = certify(design, responses, lambda, beta)) return *done;
  out.estimate = beta;
  set_active_from_estimate(out);
  const double cd_violation = kkt_violation(out);
  if (auto polished = solve_on_active(design, responses, lambda, out.active, out.signs)) {
    LassoState trial = out;
    trial.estimate = *polished;
    set_active_from_estimate(trial);
    if (kkt_violation(trial) <= std::max(cd_violation, 1e-9)) out = std::move(trial);
  }
  return out;
}

namespace {

struct PathPoint {
  Vector beta;
  std::vector<int> active;
  std::vector<int> signs;
};

void erase_at(PathPoint& pt, std::size_t pos) {
  pt.beta(pt.active[pos]) = 0.0;
  pt.active.erase(pt.active.begin() + static_cast<long>(pos));
  pt.signs.erase(pt.signs.begin() + static_cast<long>(pos));
}

void insert_sorted(PathPoint& pt, int j, int sign) {
  auto it = std::lower_bound(pt.active.begin(), pt.active.end(), j);
  const auto pos = it - pt.active.begin();
  pt.active.insert(it, j);
  pt.signs.insert(pt.signs.begin() + pos, sign);
}

// Factorization of an active-set Gram matrix, rejected when numerically singular.
std::optional<Eigen::LDLT<Matrix>> factor(const Matrix& gram) {
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (ldlt.vectorD().minCoeff() <= 1e-10 * scale) return std::nullopt;
  return ldlt;
}

// Moves lambda from `lam` to `target` on fixed data.
bool follow_lambda(const Matrix& x, const Vector& y, PathPoint& pt, double lam, double target) {
  const int p = static_cast<int>(x.cols());
  const int cap = 20 * p + 100;
  if (x.rows() == 0) return true;
  for (int iter = 0; iter < cap; ++iter) {
    const double delta = target - lam;
    if (delta == 0.0) return true;
    const auto k = pt.active.size();
    Vector v = Vector::Zero(k);
    Vector dcorr = Vector::Zero(p);
    if (k > 0) {
      const Matrix xa = x(Eigen::all, pt.active);
      auto ldlt = factor(xa.transpose() * xa);
      if (!ldlt) return false;
      Vector s(k);
      for (std::size_t i = 0; i < k; ++i) s(i) = pt.signs[i];
      v = -ldlt->solve(s);
      dcorr = -(x.transpose() * (xa * v));
    }
    const Vector corr = x.transpose() * (y - x * pt.beta);

    double tau_best = 1.0;
    int leave = -1, enter = -1;
    for (std::size_t i = 0; i < k; ++i) {
      const double rate = delta * v(i);
      if (rate == 0.0) continue;
      const double tau = -pt.beta(pt.active[i]) / rate;
      if (tau > kStepEps && tau < tau_best) {
        tau_best = tau;
        leave = static_cast<int>(i);
        enter = -1;
      }
    }
    std::vector<bool> is_active(p, false);
    for (int j : pt.active) is_active[j] = true;
    for (int j = 0; j < p; ++j) {
      if (is_active[j]) continue;
      for (double side : {1.0, -1.0}) {
        const double denom = delta * (dcorr(j) - side);
        if (denom == 0.0) continue;
        const double tau = (side * lam - corr(j)) / denom;
        if (tau > kStepEps && tau < tau_best) {
          tau_best = tau;
          enter = j;
          leave = -1;
        }
      }
    }

    for (std::size_t i = 0; i < k; ++i) pt.beta(pt.active[i]) += tau_best * delta * v(i);
    if (leave < 0 && enter < 0) return true;
    lam += tau_best * delta;
    if (leave >= 0) {
      erase_at(pt, static_cast<std::size_t>(leave));
    } else {
      const double c_new = corr(enter) + tau_best * delta * dcorr(enter);
      insert_sorted(pt, enter, c_new > 0 ? 1 : -1);
    }
  }
  return false;
}

// Moves the weight of the appended row (x_new, y_new) from 0 to 1 at fixed lambda.
bool follow_new_row(const Matrix& x, const Vector& y, const Vector& x_new, double y_new, PathPoint& pt, double lam) {
  const int p = static_cast<int>(x.cols());
  const int cap = 20 * p + 100;
  double mu = 0.0;
  for (int iter = 0; iter < cap; ++iter) {
    if (mu >= 1.0) return true;
    const auto k = pt.active.size();
    const double err = y_new - x_new.dot(pt.beta);
    Vector u = Vector::Zero(k);
    Vector cross = Vector::Zero(p);  // X^T X_A u
    double alpha = 0.0;
    Matrix xa(x.rows(), k);
    if (k > 0) {
      xa = x(Eigen::all, pt.active);
      const Vector xna = x_new(pt.active);
      Matrix h = xa.transpose() * xa;
      h.noalias() += mu * xna * xna.transpose();
      auto ldlt = factor(h);
      if (!ldlt) return false;
      u = ldlt->solve(xna);
      alpha = xna.dot(u);
      cross = x.transpose() * (xa * u);
    }
    if (err == 0.0) return true;

    const Vector corr = x.transpose() * (y - x * pt.beta) + (mu * err) * x_new;
    const Vector dcorr = err * (x_new * (1.0 - mu * alpha) - cross);
    const double g_end = (1.0 - mu) / (1.0 + (1.0 - mu) * alpha);
    const double eps = kStepEps * std::max(g_end, 1e-300);

    double g_best = g_end;
    int leave = -1, enter = -1;
    for (std::size_t i = 0; i < k; ++i) {
      const double rate = err * u(i);
      if (rate == 0.0) continue;
      const double g = -pt.beta(pt.active[i]) / rate;
      if (g > eps && g < g_best) {
        g_best = g;
        leave = static_cast<int>(i);
        enter = -1;
      }
    }
    std::vector<bool> is_active(p, false);
    for (int j : pt.active) is_active[j] = true;
    for (int j = 0; j < p; ++j) {
      if (is_active[j] || dcorr(j) == 0.0) continue;
      for (double side : {1.0, -1.0}) {
        const double g = (side * lam - corr(j)) / dcorr(j);
        if (g > eps && g < g_best) {
          g_best = g;
          enter = j;
          leave = -1;
        }
      }
    }

    for (std::size_t i = 0; i < k; ++i) pt.beta(pt.active[i]) += g_best * err * u(i);
    if (leave < 0 && enter < 0) return true;
    mu += g_best / (1.0 - g_best * alpha);
    if (leave >= 0) {
      erase_at(pt, static_cast<std::size_t>(leave));
    } else {
      const double c_new = corr(enter) + g_best * dcorr(enter);
      insert_sorted(pt, enter, c_new > 0 ? 1 : -1);
    }
  }
  return false;
}

}  // namespace

LassoState homotopy_update(const LassoState& state, const Vector& new_row, double new_y, double lambda_next) {
  const int p = state.features();
  require_dims(new_row.size() == p, "homotopy_update: row length differs from feature count");
  if (!(lambda_next >= 0.0) || !std::isfinite(lambda_next))
    throw ValidationError("lambda", "lambda must be finite and >= 0");
  if (!std::isfinite(new_y) || !new_row.allFinite()) throw ValidationError("observation", "non-finite observation");

  LassoState out;
  out.design.resize(state.design.rows() + 1, p);
  out.design << state.design, new_row.transpose();
  out.responses.resize(state.responses.size() + 1);
  out.responses << state.responses, new_y;
  out.lambda = lambda_next;

  PathPoint pt{state.estimate, state.active, state.signs};
  bool ok = follow_lambda(state.design, state.responses, pt, state.lambda, lambda_next);
  if (ok) ok = follow_new_row(state.design, state.responses, new_row, new_y, pt, lambda_next);
  if (ok) {
    if (auto exact = solve_on_active(out.design, out.responses, lambda_next, pt.active, pt.signs)) {
      out.estimate = *exact;
      set_active_from_estimate(out);
      const double tol = 1e-7 * std::max(1.0, lambda_next);
      if (kkt_violation(out) <= tol) return out;
    }
  }
  LassoState solved = lasso_solve(out.design, out.responses, lambda_next);
  solved.fallback = true;
  return solved;
}

Matrix precision_estimate(const LassoState& state, double noise_sd) {
  if (state.active.empty()) throw ValidationError("active_set", "covariance estimate needs a nonempty active set");
  if (!(noise_sd > 0.0)) throw ValidationError("noise_sd", "noise_sd must be positive");
  const Matrix xs = state.design(Eigen::all, state.active);
  Matrix gram = xs.transpose() * xs;
  const auto k = static_cast<double>(state.active.size());
  double eps = 1e-8 * gram.trace() / k;
  if (!(eps > 0.0)) eps = 1e-8;
  gram.diagonal().array() += eps;
  return symmetrized(gram) / (noise_sd * noise_sd);
}

Matrix covariance_estimate(const LassoState& state, double noise_sd) {
  const Matrix precision = precision_estimate(state, noise_sd);
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance_estimate: jittered Gram is not positive definite");
  return symmetrized(llt.solve(Matrix::Identity(precision.rows(), precision.cols())));
}

double lambda_schedule(int step, int p, double noise_sd, double scale) {
  if (step < 0) throw ValidationError("step", "step must be >= 0");
  if (p < 1) throw ValidationError("p", "p must be >= 1");
  return scale * noise_sd * std::sqrt(2.0 * std::log(static_cast<double>(p)) / (step + 1.0));
}

}  // namespace spkg
