#pragma once

#include <cmath>
#include <random>

#include "spkg/linalg.hpp"
#include "spkg/rng.hpp"

namespace spkg::testing {

inline Matrix random_matrix(Index r, Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline Vector random_vector(Index n, Rng& rng) { return random_matrix(n, 1, rng).col(0); }

/// Well-conditioned SPD matrix.
inline Matrix random_spd(Index n, Rng& rng, double ridge = 0.1) {
  const Matrix a = random_matrix(n, n, rng);
  return symmetrized(a * a.transpose() / static_cast<double>(n) + ridge * Matrix::Identity(n, n));
}

/// E[max_i (a_i + b_i Z)] - max a by composite Simpson on [-12, 12].
inline double h_quadrature(const Vector& a, const Vector& b, int intervals = 40000) {
  const double lo = -12.0, hi = 12.0, step = (hi - lo) / intervals;
  double sum = 0.0;
  for (int k = 0; k <= intervals; ++k) {
    const double z = lo + k * step;
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * (a + b * z).maxCoeff() * std::exp(-0.5 * z * z);
  }
  return sum * step / 3.0 / std::sqrt(2.0 * M_PI) - a.maxCoeff();
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace spkg::testing
