#pragma once

// Recursive l1-regularized least squares for the penalized form
//   minimize 1/2 ||y - X b||^2 + lambda ||b||_1.

#include <vector>

#include "spkg/linalg.hpp"

namespace spkg {

struct LassoState {
  Matrix design;          // n x p
  Vector responses;       // n
  Vector estimate;        // p, zero off the active set
  std::vector<int> active;  // ascending
  std::vector<int> signs;   // +-1, aligned with `active`
  double lambda = 0.0;
  bool fallback = false;  // set when a homotopy update had to re-solve from scratch

  int features() const { return static_cast<int>(estimate.size()); }
  int observations() const { return static_cast<int>(responses.size()); }

  /// Empty data set over p features at the given lambda.
  static LassoState empty(int p, double lambda);
};

struct LassoOptions {
  double gap_tolerance = 1e-10;  // relative to max(1, ||y||^2 / 2)
  int max_sweeps = 200000;
};

/// Largest KKT violation of the state's estimate at its lambda: |g_j - lambda s_j| on
/// the active set, max(0, |g_j| - lambda) elsewhere, with g = X^T (y - X b).
/// Also counts nonzeros outside `active` as violations.
double kkt_violation(const LassoState& state);

/// Cyclic coordinate descent with a duality-gap stop, followed by an exact
/// solve of the KKT system on the detected active set.
LassoState lasso_solve(const Matrix& design, const Vector& responses, double lambda, const LassoOptions& opts = {});

/// Adds one observation and moves the regularization level to `lambda_next`:
/// first follows the lambda path on the existing data, then the path in the
/// weight of the new row from 0 to 1. Falls back to lasso_solve (and sets
/// `fallback`) when the active-set Gram matrix becomes singular or the path
/// fails to certify.
LassoState homotopy_update(const LassoState& state, const Vector& new_row, double new_y, double lambda_next);

/// sigma^2 (X_S^T X_S + eps I)^{-1}, eps = 1e-8 trace(X_S^T X_S) / |S|.
Matrix covariance_estimate(const LassoState& state, double noise_sd);
/// Inverse of covariance_estimate, formed without inverting.
Matrix precision_estimate(const LassoState& state, double noise_sd);

/// c sigma sqrt(2 ln(p) / (n + 1)).
double lambda_schedule(int step, int p, double noise_sd, double scale = 0.5);

}  // namespace spkg
