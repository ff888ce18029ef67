#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace spkg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised when operand shapes disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical precondition fails (non-PSD input, singular system, non-finite value).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed user input. `field` names the offending input when known.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::invalid_argument(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline void require_dims(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

/// (A + A^T) / 2
inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Smallest eigenvalue of the symmetric part of `a`; +inf for an empty matrix.
double min_eigenvalue(const Matrix& a);

/// Throws NumericalError unless `a` is square, symmetric within `sym_tol` and has
/// min eigenvalue >= -psd_tol after symmetrization.
void require_psd(const Matrix& a, const char* what, double sym_tol = 1e-9, double psd_tol = 1e-8);

/// Rows `rows` and columns `cols` of `a`.
Matrix submatrix(const Matrix& a, const std::vector<int>& rows, const std::vector<int>& cols);
Vector subvector(const Vector& v, const std::vector<int>& idx);

/// Index of the maximum entry, lowest index on ties. Requires a non-empty vector.
int argmax_lowest(const Vector& v);

}  // namespace spkg
