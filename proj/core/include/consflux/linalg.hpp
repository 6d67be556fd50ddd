#pragma once

// Compressed-row sparse matrices and Krylov solvers.

#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace consflux {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Square n x n matrix from (row, col, value) triplets; duplicates are
  /// summed, columns sorted per row. Throws std::out_of_range on bad indices.
  static SparseMatrix assemble(std::size_t n, std::vector<Triplet> triplets);

  std::size_t size() const { return n_; }
  std::size_t nonzeros() const { return values_.size(); }
  const std::vector<std::size_t>& row_offsets() const { return offsets_; }
  const std::vector<int>& columns() const { return cols_; }
  const std::vector<double>& values() const { return values_; }

  /// A(i, j), zero when not stored.
  double at(int i, int j) const;
  std::vector<double> diagonal() const;
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  std::vector<double> operator*(const std::vector<double>& x) const;

  /// max |A_ij - A_ji| / max |A|, zero for an empty matrix.
  double asymmetry() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<int> cols_;
  std::vector<double> values_;
};

enum class Preconditioner { None, SSOR, Jacobi };

struct SolverConfig {
  double tolerance = 1e-10;  // relative to ||b||
  int max_iterations = 20000;
  Preconditioner preconditioner = Preconditioner::None;
  double relaxation = 1.5;  // SSOR only

  void validate() const;
};

struct SolveResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Preconditioned conjugate gradients for symmetric positive (semi-)definite A.
/// Convergence is confirmed on the true residual b - Ax. For singular A pass a
/// vector spanning the nullspace; residuals are kept orthogonal to it.
SolveResult cg_solve(const SparseMatrix& a, const std::vector<double>& b, const SolverConfig& cfg,
                     std::vector<double> x0 = {}, const std::vector<double>& nullspace = {});

/// z = M^{-1} r with M = (D/w + L) (w/(2-w)) D^{-1} (D/w + U).
std::vector<double> ssor_apply(const SparseMatrix& a, double relaxation,
                               const std::vector<double>& r);

/// BiCGStab for general nonsingular A. Preconditioner may be None or Jacobi.
SolveResult bicgstab_solve(const SparseMatrix& a, const std::vector<double>& b,
                           const SolverConfig& cfg);

void write_matrix_market(const SparseMatrix& a, std::ostream& out);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

}  // namespace consflux
