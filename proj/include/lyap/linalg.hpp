#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lyap/exec.hpp"

namespace lyap {

using Vec = std::vector<double>;

/// Compressed sparse row matrix. Column indices within a row are kept in
/// ascending order so that identical inputs always produce identical storage.
struct CsrMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr;  // size rows+1
    std::vector<int> col_idx;  // size nnz
    std::vector<double> vals;  // size nnz

    static CsrMatrix zero(int rows, int cols);
    static CsrMatrix identity(int n);

    /// Builds from per-row (col, value) pairs; each row must be sorted by
    /// column with no duplicates.
    static CsrMatrix from_rows(int cols,
                               const std::vector<std::vector<std::pair<int, double>>>& rows);

    std::size_t nnz() const { return vals.size(); }

    double at(int i, int j) const;  // 0 if absent
    double row_sum(int i) const;

    /// Dense row extraction, mostly for tests and small instances.
    Vec dense_row(int i) const;
    std::vector<Vec> to_dense() const;

    bool operator==(const CsrMatrix& o) const = default;
};

/// y = A x
void csr_matvec(const CsrMatrix& a, std::span<const double> x, std::span<double> y,
                Exec exec = Exec::serial);
/// y = A' x
void csr_matvec_transpose(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> v);
double norm_one(std::span<const double> v);

/// Row-major dense square/rectangular matrix used by the LP solver and the
/// direct linear solves. Not meant for very large N; the library documents a
/// practical ceiling of a few thousand rows.
class DenseMatrix {
  public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(std::size_t(rows) * cols, 0.0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double* row(int i) { return a_.data() + std::size_t(i) * cols_; }
    const double* row(int i) const { return a_.data() + std::size_t(i) * cols_; }
    double& operator()(int i, int j) { return a_[std::size_t(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[std::size_t(i) * cols_ + j]; }
    void set_zero() { std::fill(a_.begin(), a_.end(), 0.0); }

    static DenseMatrix from_csr(const CsrMatrix& a);

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

/// In-place Cholesky factorization of the lower triangle (A = L L').
/// Returns false when a pivot drops below `pivot_floor` (caller may
/// regularize and retry). Upper triangle is left untouched.
bool cholesky_factor(DenseMatrix& a, double pivot_floor, Exec exec);

/// Solves L L' x = b in place using the factor from cholesky_factor.
void cholesky_solve(const DenseMatrix& l, std::span<double> x);

/// In-place blocked LU with partial pivoting. Returns false on an exactly
/// singular pivot column.
bool lu_factor(DenseMatrix& a, std::vector<int>& perm, Exec exec);
void lu_solve(const DenseMatrix& lu, const std::vector<int>& perm, std::span<double> x);

/// y = A x for dense A.
void dense_matvec(const DenseMatrix& a, std::span<const double> x, std::span<double> y);

struct PowerIterationResult {
    double spectral_radius = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Estimates the spectral radius of a nonnegative matrix by power iteration
/// on a positive start vector (Collatz-Wielandt quotient on the 1-norm).
/// Imprimitive matrices make the plain quotient oscillate, so a second pass
/// on the diagonally shifted matrix A + cI is used when the first stalls.
PowerIterationResult power_iteration_spectral_radius(const CsrMatrix& a,
                                                     double tol = 1e-10,
                                                     int max_iters = 10000);

/// Solves (I - gamma * A') x = b with BiCGSTAB (Jacobi preconditioned).
/// Used for instances past the direct-solve ceiling. Residual history is
/// appended to `history` when non-null.
bool bicgstab_shifted_transpose(const CsrMatrix& a, double gamma, std::span<const double> b,
                                std::span<double> x, double tol, int max_iters,
                                std::vector<double>* history = nullptr);

} // namespace lyap
