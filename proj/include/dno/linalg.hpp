#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dno/mpnum.hpp"

namespace dno {

/// Row-major dense complex matrix at a single precision.
class DenseMatrix {
 public:
  DenseMatrix(int rows, int cols, const PrecisionCtx& ctx);
  static DenseMatrix identity(int n, const PrecisionCtx& ctx);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  PrecisionCtx ctx() const { return PrecisionCtx(bits_); }

  MpComplex& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  const MpComplex& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }
  std::span<MpComplex> row(int i) { return {a_.data() + static_cast<size_t>(i) * cols_, static_cast<size_t>(cols_)}; }
  std::span<const MpComplex> row(int i) const {
    return {a_.data() + static_cast<size_t>(i) * cols_, static_cast<size_t>(cols_)};
  }
  std::vector<MpComplex> column(int j) const;
  void set_column(int j, std::span<const MpComplex> v);

  DenseMatrix adjoint() const;
  MpReal frobenius_norm() const;
  MpReal max_abs() const;

 private:
  int rows_, cols_, bits_;
  std::vector<MpComplex> a_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(int column, const std::string& what) : std::runtime_error(what), column_(column) {}
  int column() const noexcept { return column_; }

 private:
  int column_;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, const std::string& what) : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// C = A B, rows distributed over OpenMP threads.
DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B);
/// Single-threaded reference; bit-identical to matmul.
DenseMatrix matmul_serial(const DenseMatrix& A, const DenseMatrix& B);
std::vector<MpComplex> matvec(const DenseMatrix& A, std::span<const MpComplex> x);
/// A* x
std::vector<MpComplex> matvec_adjoint(const DenseMatrix& A, std::span<const MpComplex> x);

/// LU factorization with partial pivoting.
class LuFactorization {
 public:
  /// Throws SingularMatrixError on an exactly zero pivot.
  explicit LuFactorization(DenseMatrix A);
  int size() const noexcept { return lu_.rows(); }
  std::vector<MpComplex> solve(std::span<const MpComplex> b) const;
  /// Solves A* x = b.
  std::vector<MpComplex> solve_adjoint(std::span<const MpComplex> b) const;
  /// Hager–Higham estimate of ‖A⁻¹‖₁.
  MpReal inverse_norm1_estimate() const;

 private:
  DenseMatrix lu_;
  std::vector<int> perm_;
};

std::vector<MpComplex> lu_solve(const DenseMatrix& A, std::span<const MpComplex> b);
MpReal norm1(const DenseMatrix& A);

struct QrFactorization {
  DenseMatrix Q;  // rows × cols, orthonormal columns
  DenseMatrix R;  // cols × cols, upper triangular, diagonal real ≥ 0
  /// Columns whose R diagonal fell below cols·2^(-bits+8)·‖A‖_F.
  std::vector<int> rank_warnings;
};

/// Householder QR without pivoting. Requires cols ≤ rows.
QrFactorization qr_factor(const DenseMatrix& A);

struct SvdFactorization {
  DenseMatrix U;          // rows × r
  std::vector<MpReal> S;  // descending, r = cols
  DenseMatrix V;          // r × r
  int sweeps = 0;
  int rank() const noexcept { return static_cast<int>(S.size()); }
};

/// One-sided Jacobi SVD (cyclic by rows) applied to the triangular factor of a
/// column-pivoted QR. Requires cols ≤ rows. Throws ConvergenceError after 30 sweeps.
SvdFactorization svd(const DenseMatrix& A);

/// V diag(1/S_i, i < cutoff) U* y, i.e. the truncated pseudo-inverse of A applied to y.
std::vector<MpComplex> pinv_apply(const SvdFactorization& F, int cutoff, std::span<const MpComplex> y);
/// U diag(1/S_i, i < cutoff) V* y, the truncated pseudo-inverse of A*.
std::vector<MpComplex> pinv_apply_adjoint(const SvdFactorization& F, int cutoff, std::span<const MpComplex> y);

struct GmresResult {
  std::vector<MpComplex> x;
  int iterations = 0;
  bool converged = false;
  MpReal relative_residual;
};

/// Restarted GMRES for x ↦ op(x) = b, stopping at ‖r‖ ≤ tol ‖b‖.
GmresResult gmres(const std::function<std::vector<MpComplex>(std::span<const MpComplex>)>& op,
                  std::span<const MpComplex> b, const MpReal& tol, int restart, int max_iterations);

}  // namespace dno
