#include <doctest.h>

#include "helpers.hpp"
#include "spkg/lasso.hpp"

using namespace spkg;
using namespace spkg::testing;

TEST_CASE("orthogonal design gives soft thresholding") {
  const Matrix x = 2.0 * Matrix::Identity(3, 3);
  const Vector y = (Vector(3) << 4.0, -0.5, -3.0).finished();
  // x^T y = (8, -1, -6); minimizer b_j = S(x_j^T y, lambda) / 4
  const auto s = lasso_solve(x, y, 2.0);
  CHECK(s.estimate(0) == doctest::Approx(1.5));
  CHECK(s.estimate(1) == 0.0);
  CHECK(s.estimate(2) == doctest::Approx(-1.0));
  CHECK(s.active == std::vector<int>{0, 2});
  CHECK(s.signs == std::vector<int>{1, -1});
  CHECK(kkt_violation(s) < 1e-10);
}

TEST_CASE("lambda zero on a full-rank design is least squares") {
  Rng rng(2);
  const Matrix x = random_matrix(10, 4, rng);
  const Vector y = random_vector(10, rng);
  const auto s = lasso_solve(x, y, 0.0);
  const Vector ls = x.colPivHouseholderQr().solve(y);
  CHECK((s.estimate - ls).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("homotopy update matches a from-scratch solve") {
  Rng rng(17);
  int fallbacks = 0, total = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const int p = 3 + rep % 10;
    const int n = 12;
    const Matrix x = random_matrix(n, p, rng);
    Vector truth = Vector::Zero(p);
    truth(0) = 2.0;
    truth(p - 1) = -1.5;
    const Vector y = x * truth + 0.3 * random_vector(n, rng);
    LassoState state = LassoState::empty(p, 1.0);
    for (int i = 0; i < n; ++i) {
      const double lam = 0.5 + 2.0 / (i + 1);
      state = homotopy_update(state, x.row(i).transpose(), y(i), lam);
      const auto ref = lasso_solve(x.topRows(i + 1), y.head(i + 1), lam);
      CHECK((state.estimate - ref.estimate).lpNorm<Eigen::Infinity>() < 1e-6);
      CHECK(kkt_violation(state) < 1e-7 * std::max(1.0, lam));
      fallbacks += state.fallback;
      ++total;
    }
  }
  MESSAGE("homotopy fallbacks: " << fallbacks << " of " << total);
  CHECK(fallbacks * 10 < total);
}

TEST_CASE("homotopy handles duplicate rows and a zero row") {
  LassoState s = LassoState::empty(2, 0.1);
  const Vector r = (Vector(2) << 1.0, 1.0).finished();
  s = homotopy_update(s, r, 1.0, 0.1);
  s = homotopy_update(s, r, 1.0, 0.1);
  s = homotopy_update(s, Vector::Zero(2), 0.0, 0.1);
  const auto ref = lasso_solve(s.design, s.responses, 0.1);
  CHECK((s.estimate - ref.estimate).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(kkt_violation(s) < 1e-7);
}

TEST_CASE("degenerate designs are solved to a certified basic solution") {
  // Repeated and linearly dependent columns, as produced by overlapping probes:
  // the minimizer is not unique and coordinate descent alone crawls.
  Rng rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 8 + rep % 6;
    const Matrix base = random_matrix(n, 10, rng).cwiseAbs();
    Matrix x(n, 30);
    x << base, base.leftCols(5), base.col(0) + base.col(1), base.col(2) + base.col(3), base.col(4) + base.col(5),
        base.col(6) + base.col(7), base.col(8) + base.col(9), base.col(1) + base.col(2), base.col(3) + base.col(4),
        base.col(5) + base.col(6), base.col(7) + base.col(8), base.col(0) + base.col(9), Matrix::Zero(n, 5);
    const Vector y = 20.0 * random_vector(n, rng);
    for (double lam : {0.01, 0.5, 4.0}) {
      const auto s = lasso_solve(x, y, lam);
      CHECK(kkt_violation(s) <= 1e-9 * std::max(1.0, lam));
      if (!s.active.empty()) {
        const Matrix xa = x(Eigen::all, s.active);
        CHECK(Eigen::FullPivLU<Matrix>(xa).rank() == static_cast<Index>(s.active.size()));
      }
    }
  }
}

TEST_CASE("covariance and precision estimates are inverse") {
  Rng rng(4);
  const Matrix x = random_matrix(15, 5, rng);
  const Vector y = x * (Vector(5) << 1, 0, 0, -1, 0).finished();
  const auto s = lasso_solve(x, y, 0.5);
  REQUIRE(!s.active.empty());
  const Matrix c = covariance_estimate(s, 0.3);
  const Matrix p = precision_estimate(s, 0.3);
  CHECK(c.rows() == static_cast<Index>(s.active.size()));
  CHECK(rel_diff(c * p, Matrix::Identity(c.rows(), c.cols())) < 1e-8);
}

TEST_CASE("lambda schedule") {
  CHECK(lambda_schedule(0, 60, 2.0) == doctest::Approx(0.5 * 2.0 * std::sqrt(2.0 * std::log(60.0))));
  CHECK(lambda_schedule(3, 60, 2.0) < lambda_schedule(2, 60, 2.0));
  CHECK_THROWS(lasso_solve(Matrix::Identity(2, 2), Vector::Ones(3), 1.0));
  CHECK_THROWS(lasso_solve(Matrix::Identity(2, 2), Vector::Ones(2), -1.0));
}
