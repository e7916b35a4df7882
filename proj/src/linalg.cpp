#include "lyap/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace lyap {

CsrMatrix CsrMatrix::zero(int rows, int cols) {
    CsrMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_ptr.assign(std::size_t(rows) + 1, 0);
    return m;
}

CsrMatrix CsrMatrix::identity(int n) {
    CsrMatrix m;
    m.rows = n;
    m.cols = n;
    m.row_ptr.resize(std::size_t(n) + 1);
    m.col_idx.resize(n);
    m.vals.assign(n, 1.0);
    for (int i = 0; i <= n; ++i) m.row_ptr[i] = i;
    for (int i = 0; i < n; ++i) m.col_idx[i] = i;
    return m;
}

CsrMatrix CsrMatrix::from_rows(int cols,
                               const std::vector<std::vector<std::pair<int, double>>>& rows) {
    CsrMatrix m;
    m.rows = int(rows.size());
    m.cols = cols;
    m.row_ptr.resize(rows.size() + 1);
    m.row_ptr[0] = 0;
    std::size_t nnz = 0;
    for (const auto& r : rows) nnz += r.size();
    m.col_idx.reserve(nnz);
    m.vals.reserve(nnz);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int prev = -1;
        for (const auto& [c, v] : rows[i]) {
            if (c <= prev || c >= cols) {
                throw std::invalid_argument("CsrMatrix::from_rows: columns must be sorted, "
                                            "unique and in range");
            }
            prev = c;
            m.col_idx.push_back(c);
            m.vals.push_back(v);
        }
        m.row_ptr[i + 1] = int(m.col_idx.size());
    }
    return m;
}

double CsrMatrix::at(int i, int j) const {
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        if (col_idx[k] == j) return vals[k];
    }
    return 0.0;
}

double CsrMatrix::row_sum(int i) const {
    double s = 0.0;
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += vals[k];
    return s;
}

Vec CsrMatrix::dense_row(int i) const {
    Vec r(cols, 0.0);
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) r[col_idx[k]] = vals[k];
    return r;
}

std::vector<Vec> CsrMatrix::to_dense() const {
    std::vector<Vec> d(rows);
    for (int i = 0; i < rows; ++i) d[i] = dense_row(i);
    return d;
}

void csr_matvec(const CsrMatrix& a, std::span<const double> x, std::span<double> y, Exec exec) {
    assert(int(x.size()) == a.cols && int(y.size()) == a.rows);
    const int* rp = a.row_ptr.data();
    const int* ci = a.col_idx.data();
    const double* v = a.vals.data();
    const double* xp = x.data();
    double* yp = y.data();
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < a.rows; ++i) {
            double s = 0.0;
            for (int k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * xp[ci[k]];
            yp[i] = s;
        }
    } else {
        for (int i = 0; i < a.rows; ++i) {
            double s = 0.0;
            for (int k = rp[i]; k < rp[i + 1]; ++k) s += v[k] * xp[ci[k]];
            yp[i] = s;
        }
    }
}

void csr_matvec_transpose(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
    assert(int(x.size()) == a.rows && int(y.size()) == a.cols);
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            y[a.col_idx[k]] += a.vals[k] * xi;
        }
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm_inf(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double norm_one(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

DenseMatrix DenseMatrix::from_csr(const CsrMatrix& a) {
    DenseMatrix d(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            d(i, a.col_idx[k]) = a.vals[k];
        }
    }
    return d;
}

namespace {
constexpr int kBlock = 64;

// Unblocked lower Cholesky on the [k, k+kb) diagonal block.
bool cholesky_diag_block(DenseMatrix& a, int k, int kb, double pivot_floor) {
    for (int j = k; j < k + kb; ++j) {
        double* aj = a.row(j);
        double d = aj[j];
        for (int p = k; p < j; ++p) d -= aj[p] * aj[p];
        if (!(d > pivot_floor)) return false;
        d = std::sqrt(d);
        aj[j] = d;
        const double inv = 1.0 / d;
        for (int i = j + 1; i < k + kb; ++i) {
            double* ai = a.row(i);
            double s = ai[j];
            for (int p = k; p < j; ++p) s -= ai[p] * aj[p];
            ai[j] = s * inv;
        }
    }
    return true;
}

// Panel rows i >= k+kb: L[i, k:k+kb] = A[i, k:k+kb] * L11^{-T}.
void cholesky_panel_row(DenseMatrix& a, int k, int kb, int i) {
    double* ai = a.row(i);
    for (int c = k; c < k + kb; ++c) {
        const double* ac = a.row(c);
        double s = ai[c];
        for (int p = k; p < c; ++p) s -= ai[p] * ac[p];
        ai[c] = s / ac[c];
    }
}

// Trailing update row i: A[i, k+kb : i+1] -= L[i, panel] * L[j, panel]'.
void cholesky_update_row(DenseMatrix& a, int k, int kb, int i) {
    double* ai = a.row(i);
    for (int j = k + kb; j <= i; ++j) {
        const double* ajr = a.row(j);
        double s = 0.0;
        for (int p = k; p < k + kb; ++p) s += ai[p] * ajr[p];
        ai[j] -= s;
    }
}
} // namespace

bool cholesky_factor(DenseMatrix& a, double pivot_floor, Exec exec) {
    const int n = a.rows();
    for (int k = 0; k < n; k += kBlock) {
        const int kb = std::min(kBlock, n - k);
        if (!cholesky_diag_block(a, k, kb, pivot_floor)) return false;
        if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
            for (int i = k + kb; i < n; ++i) cholesky_panel_row(a, k, kb, i);
#pragma omp parallel for schedule(dynamic, 16)
            for (int i = k + kb; i < n; ++i) cholesky_update_row(a, k, kb, i);
        } else {
            for (int i = k + kb; i < n; ++i) cholesky_panel_row(a, k, kb, i);
            for (int i = k + kb; i < n; ++i) cholesky_update_row(a, k, kb, i);
        }
    }
    return true;
}

void cholesky_solve(const DenseMatrix& l, std::span<double> x) {
    const int n = l.rows();
    for (int i = 0; i < n; ++i) {
        const double* li = l.row(i);
        double s = x[i];
        for (int j = 0; j < i; ++j) s -= li[j] * x[j];
        x[i] = s / li[i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < n; ++j) s -= l(j, i) * x[j];
        x[i] = s / l(i, i);
    }
}

bool lu_factor(DenseMatrix& a, std::vector<int>& perm, Exec exec) {
    const int n = a.rows();
    perm.resize(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    for (int k = 0; k < n; k += kBlock) {
        const int kb = std::min(kBlock, n - k);
        // Unblocked panel factorization with partial pivoting; row swaps are
        // applied to the full rows so the trailing update stays a plain GEMM.
        for (int c = k; c < k + kb; ++c) {
            int piv = c;
            double pv = std::abs(a(c, c));
            for (int i = c + 1; i < n; ++i) {
                const double v = std::abs(a(i, c));
                if (v > pv) {
                    pv = v;
                    piv = i;
                }
            }
            if (pv == 0.0) return false;
            if (piv != c) {
                double* r1 = a.row(c);
                double* r2 = a.row(piv);
                for (int j = 0; j < n; ++j) std::swap(r1[j], r2[j]);
                std::swap(perm[c], perm[piv]);
            }
            const double inv = 1.0 / a(c, c);
            for (int i = c + 1; i < n; ++i) {
                double* ai = a.row(i);
                const double m = ai[c] * inv;
                ai[c] = m;
                const double* acr = a.row(c);
                for (int j = c + 1; j < k + kb; ++j) ai[j] -= m * acr[j];
            }
        }
        if (k + kb >= n) break;
        // U12 = L11^{-1} A12
        for (int c = k; c < k + kb; ++c) {
            const double* acr = a.row(c);
            for (int i = c + 1; i < k + kb; ++i) {
                double* ai = a.row(i);
                const double m = ai[c];
                if (m == 0.0) continue;
                for (int j = k + kb; j < n; ++j) ai[j] -= m * acr[j];
            }
        }
        // A22 -= L21 * U12
        auto update_row = [&](int i) {
            double* ai = a.row(i);
            for (int p = k; p < k + kb; ++p) {
                const double m = ai[p];
                if (m == 0.0) continue;
                const double* apr = a.row(p);
                for (int j = k + kb; j < n; ++j) ai[j] -= m * apr[j];
            }
        };
        if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
            for (int i = k + kb; i < n; ++i) update_row(i);
        } else {
            for (int i = k + kb; i < n; ++i) update_row(i);
        }
    }
    return true;
}

void lu_solve(const DenseMatrix& lu, const std::vector<int>& perm, std::span<double> x) {
    const int n = lu.rows();
    Vec b(n);
    for (int i = 0; i < n; ++i) b[i] = x[perm[i]];
    for (int i = 0; i < n; ++i) {
        const double* li = lu.row(i);
        double s = b[i];
        for (int j = 0; j < i; ++j) s -= li[j] * b[j];
        b[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        const double* li = lu.row(i);
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= li[j] * b[j];
        b[i] = s / li[i];
    }
    std::copy(b.begin(), b.end(), x.begin());
}

void dense_matvec(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += ai[j] * x[j];
        y[i] = s;
    }
}

namespace {
PowerIterationResult power_iterate(const CsrMatrix& a, double shift, double tol, int max_iters) {
    const int n = a.rows;
    PowerIterationResult res;
    Vec x(n, 1.0 / std::max(1, n)), y(n);
    double lambda_prev = -1.0;
    int stable = 0;
    for (int it = 1; it <= max_iters; ++it) {
        csr_matvec(a, x, y);
        if (shift != 0.0) {
            for (int i = 0; i < n; ++i) y[i] += shift * x[i];
        }
        const double num = norm_one(y);
        if (num == 0.0) {
            // A^k x = 0 with x > 0 and A >= 0 forces A^k = 0: nilpotent.
            res.spectral_radius = 0.0;
            res.iterations = it;
            res.converged = true;
            return res;
        }
        const double lambda = num;  // x stays 1-norm normalized
        for (int i = 0; i < n; ++i) x[i] = y[i] / num;
        if (std::abs(lambda - lambda_prev) <= tol * std::max(1.0, lambda)) {
            if (++stable >= 3) {
                res.spectral_radius = lambda - shift;
                res.iterations = it;
                res.converged = true;
                return res;
            }
        } else {
            stable = 0;
        }
        lambda_prev = lambda;
    }
    res.spectral_radius = lambda_prev - shift;
    res.iterations = max_iters;
    res.converged = false;
    return res;
}
} // namespace

PowerIterationResult power_iteration_spectral_radius(const CsrMatrix& a, double tol,
                                                     int max_iters) {
    if (a.rows == 0) return {0.0, 0, true};
    PowerIterationResult res = power_iterate(a, 0.0, tol, max_iters);
    if (res.converged) return res;
    // Imprimitive spectra (e.g. permutation closed loops) make the plain
    // quotient cycle; the diagonal shift breaks the period without moving
    // the Perron root by more than the shift.
    double max_abs = 0.0;
    for (double v : a.vals) max_abs = std::max(max_abs, std::abs(v));
    const double shift = std::max(0.5 * max_abs, 1e-3);
    PowerIterationResult shifted = power_iterate(a, shift, tol, max_iters);
    shifted.iterations += res.iterations;
    if (shifted.converged) {
        shifted.spectral_radius = std::max(0.0, shifted.spectral_radius);
        return shifted;
    }
    return res;
}

bool bicgstab_shifted_transpose(const CsrMatrix& a, double gamma, std::span<const double> b,
                                std::span<double> x, double tol, int max_iters,
                                std::vector<double>* history) {
    const int n = a.rows;
    // Operator application: y = (I - gamma A') v.
    Vec tmp(n);
    auto apply = [&](std::span<const double> v, std::span<double> y) {
        csr_matvec_transpose(a, v, tmp);
        for (int i = 0; i < n; ++i) y[i] = v[i] - gamma * tmp[i];
    };

    Vec r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n);
    std::fill(x.begin(), x.end(), 0.0);
    std::copy(b.begin(), b.end(), r.begin());
    r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    const double bnorm = std::max(norm_one(b), 1e-300);
    for (int it = 0; it < max_iters; ++it) {
        const double rho_new = dot(r0, r);
        if (rho_new == 0.0) return false;
        if (it == 0) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_new;
        apply(p, v);
        alpha = rho / dot(r0, v);
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        apply(s, t);
        const double tt = dot(t, t);
        omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        const double rel = norm_one(r) / bnorm;
        if (history) history->push_back(rel);
        if (rel <= tol) return true;
        if (omega == 0.0) return false;
    }
    return false;
}

} // namespace lyap
