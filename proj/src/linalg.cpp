#include "spkg/linalg.hpp"

#include <cmath>
#include <limits>

namespace spkg {

double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void require_psd(const Matrix& a, const char* what, double sym_tol, double psd_tol) {
  if (a.rows() != a.cols()) throw DimensionError(std::string(what) + ": matrix is not square");
  if (!a.allFinite()) throw NumericalError(std::string(what) + ": non-finite entries");
  if (a.size() == 0) return;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
    throw NumericalError(std::string(what) + ": matrix is not symmetric");
  if (min_eigenvalue(a) < -psd_tol * scale)
    throw NumericalError(std::string(what) + ": matrix is not positive semidefinite");
}

Matrix submatrix(const Matrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

Vector subvector(const Vector& v, const std::vector<int>& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = v(idx[i]);
  return out;
}

int argmax_lowest(const Vector& v) {
  if (v.size() == 0) throw DimensionError("argmax of empty vector");
  int best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = static_cast<int>(i);
  return best;
}

}  // namespace spkg
