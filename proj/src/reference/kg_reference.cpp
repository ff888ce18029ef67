#include <cmath>

#include "spkg/kg.hpp"

namespace spkg::reference {

KGScores kg_lookup(const Vector& mean, const Matrix& cov, const Vector& noise_sds) {
  const Index m = mean.size();
  require_dims(cov.rows() == m && cov.cols() == m && noise_sds.size() == m, "kg_lookup: dimension mismatch");
  Vector raw(m);
  for (Index x = 0; x < m; ++x) raw(x) = h_function(mean, sigma_tilde(cov, static_cast<int>(x), noise_sds(x)));
  return make_scores(std::move(raw));
}

std::vector<McEstimate> mc_sweep(const std::vector<McContext>& contexts, const Vector& noise_sds,
                                 const Matrix& normals) {
  const Index m = noise_sds.size();
  const Index Q = normals.rows();
  const Index last = normals.cols() - 1;
  std::vector<McEstimate> out(m);
  for (Index x = 0; x < m; ++x) {
    std::vector<double> draws(Q, 0.0);
    for (const auto& ctx : contexts) {
      if (ctx.weight == 0.0) continue;
      require_dims(static_cast<Index>(ctx.directions.size()) == last, "mc_sweep: direction count");
      const Vector dir = sigma_tilde(ctx.cov, static_cast<int>(x), noise_sds(x));
      for (Index q = 0; q < Q; ++q) {
        Vector theta = ctx.mean + dir * normals(q, last);
        for (Index j = 0; j < last; ++j) theta += ctx.directions[j] * normals(q, j);
        draws[q] += ctx.weight * (theta.maxCoeff() - ctx.mean.maxCoeff());
      }
    }
    double mean = 0.0;
    for (double d : draws) mean += d;
    mean /= static_cast<double>(Q);
    double ss = 0.0;
    for (double d : draws) ss += (d - mean) * (d - mean);
    const double var = Q > 1 ? ss / static_cast<double>(Q - 1) : 0.0;
    out[x] = {mean, std::sqrt(var / static_cast<double>(Q))};
  }
  return out;
}

}  // namespace spkg::reference
