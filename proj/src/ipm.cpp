#include "lyap/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lyap/linalg.hpp"

namespace lyap {

namespace {

// Row-compressed view of the constraint matrix; built once, pattern fixed.
struct RowView {
    std::vector<int> row_ptr;
    std::vector<int> col;     // variable index
    std::vector<double> val;  // A[r][col]
};

RowView build_row_view(const SparseColumns& a) {
    RowView rv;
    rv.row_ptr.assign(std::size_t(a.rows) + 1, 0);
    for (int v = 0; v < a.cols; ++v) {
        for (int k = a.col_ptr[v]; k < a.col_ptr[v + 1]; ++k) {
            rv.row_ptr[std::size_t(a.row_idx[k]) + 1]++;
        }
    }
    for (int r = 0; r < a.rows; ++r) rv.row_ptr[r + 1] += rv.row_ptr[r];
    rv.col.resize(a.nnz());
    rv.val.resize(a.nnz());
    std::vector<int> cursor(rv.row_ptr.begin(), rv.row_ptr.end() - 1);
    for (int v = 0; v < a.cols; ++v) {
        for (int k = a.col_ptr[v]; k < a.col_ptr[v + 1]; ++k) {
            const int r = a.row_idx[k];
            rv.col[cursor[r]] = v;
            rv.val[cursor[r]] = a.vals[k];
            ++cursor[r];
        }
    }
    return rv;
}

void mat_vec(const SparseColumns& a, const double* x, double* y) {
    std::fill(y, y + a.rows, 0.0);
    for (int v = 0; v < a.cols; ++v) {
        const double xv = x[v];
        if (xv == 0.0) continue;
        for (int k = a.col_ptr[v]; k < a.col_ptr[v + 1]; ++k) {
            y[a.row_idx[k]] += a.vals[k] * xv;
        }
    }
}

void mat_t_vec(const SparseColumns& a, const double* y, double* z, Exec exec) {
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int v = 0; v < a.cols; ++v) {
            double s = 0.0;
            for (int k = a.col_ptr[v]; k < a.col_ptr[v + 1]; ++k) {
                s += a.vals[k] * y[a.row_idx[k]];
            }
            z[v] = s;
        }
    } else {
        for (int v = 0; v < a.cols; ++v) {
            double s = 0.0;
            for (int k = a.col_ptr[v]; k < a.col_ptr[v + 1]; ++k) {
                s += a.vals[k] * y[a.row_idx[k]];
            }
            z[v] = s;
        }
    }
}

// y = A * diag(d) * w computed row-wise (deterministic under any schedule).
void a_d_vec(const SparseColumns& a, const RowView& rv, const double* d, const double* w,
             double* y, Exec exec) {
    auto row_value = [&](int r) {
        double s = 0.0;
        for (int k = rv.row_ptr[r]; k < rv.row_ptr[r + 1]; ++k) {
            s += rv.val[k] * d[rv.col[k]] * w[rv.col[k]];
        }
        return s;
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < a.rows; ++r) y[r] = row_value(r);
    } else {
        for (int r = 0; r < a.rows; ++r) y[r] = row_value(r);
    }
}

// M = A diag(d) A', accumulated one output row at a time so each row has a
// fixed owner and a fixed summation order.
void build_normal_matrix(const SparseColumns& a, const RowView& rv, const double* d,
                         DenseMatrix& m, Exec exec) {
    auto fill_row = [&](int r) {
        double* out = m.row(r);
        std::fill(out, out + a.rows, 0.0);
        for (int k = rv.row_ptr[r]; k < rv.row_ptr[r + 1]; ++k) {
            const int v = rv.col[k];
            const double scale = rv.val[k] * d[v];
            for (int q = a.col_ptr[v]; q < a.col_ptr[v + 1]; ++q) {
                out[a.row_idx[q]] += scale * a.vals[q];
            }
        }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
        for (int r = 0; r < a.rows; ++r) fill_row(r);
    } else {
        for (int r = 0; r < a.rows; ++r) fill_row(r);
    }
}

struct NormalSolver {
    DenseMatrix pristine;  // regularized M, kept for refinement
    DenseMatrix factor;
    bool ready = false;

    // Factors M + delta*I, escalating delta until the Cholesky succeeds.
    void factorize(const DenseMatrix& m, Exec exec) {
        const int n = m.rows();
        double dmax = 0.0;
        for (int i = 0; i < n; ++i) dmax = std::max(dmax, m(i, i));
        if (dmax <= 0.0) dmax = 1.0;
        double delta = 1e-14 * dmax;
        for (int attempt = 0; attempt < 6; ++attempt) {
            pristine = m;
            for (int i = 0; i < n; ++i) pristine(i, i) += delta;
            factor = pristine;
            if (cholesky_factor(factor, 1e-300 * dmax + 1e-300, exec)) {
                ready = true;
                return;
            }
            delta *= 1e3;
        }
        // Last resort: heavy regularization always factors.
        pristine = m;
        for (int i = 0; i < n; ++i) pristine(i, i) += 1e-2 * dmax;
        factor = pristine;
        cholesky_factor(factor, 0.0, exec);
        ready = true;
    }

    // Solve with one step of iterative refinement against the regularized M.
    void solve(const Vec& rhs, Vec& out) const {
        out = rhs;
        cholesky_solve(factor, out);
        Vec resid(rhs.size());
        dense_matvec(pristine, out, resid);
        for (std::size_t i = 0; i < rhs.size(); ++i) resid[i] = rhs[i] - resid[i];
        cholesky_solve(factor, resid);
        for (std::size_t i = 0; i < rhs.size(); ++i) out[i] += resid[i];
    }
};

double step_limit(const Vec& v, const Vec& dv) {
    double a = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    }
    return a;
}

} // namespace

IpmResult ipm_solve(const SparseColumns& a, const Vec& b, const Vec& c,
                    const IpmOptions& options) {
    const int n = a.cols;
    const int me = a.rows;
    const Exec exec = options.exec;

    IpmResult res;
    res.x.assign(n, 1.0);
    res.s.assign(n, 1.0);
    res.y.assign(me, 0.0);
    double& tau = res.tau;
    double& kappa = res.kappa;
    tau = kappa = 1.0;

    const RowView rv = build_row_view(a);
    const double bnorm = norm_inf(b);
    const double cnorm = norm_inf(c);

    Vec d(n), h(n), rd(n), ax(me), aty(n), rp(me), rhs(me), u(me), v1(me), w(me);
    Vec dx(n), ds(n), dy(me), dxa(n), dsa(n);
    Vec xs_target(n);
    DenseMatrix m_dense(me, me);
    NormalSolver solver;
    std::ostringstream log;
    if (options.want_log) {
        log << "iter          mu       rel_p       rel_d     rel_gap         tau       kappa\n";
    }

    const double mu0 = (dot(res.x, res.s) + tau * kappa) / (n + 1);
    double mu = mu0;
    int stall = 0;
    double best_mu = mu;

    auto scaled_residuals = [&]() {
        mat_vec(a, res.x.data(), ax.data());
        mat_t_vec(a, res.y.data(), aty.data(), exec);
        double rp_inf = 0.0;
        for (int r = 0; r < me; ++r) rp_inf = std::max(rp_inf, std::abs(ax[r] / tau - b[r]));
        double rd_inf = 0.0;
        for (int v = 0; v < n; ++v) {
            rd_inf = std::max(rd_inf, std::abs((aty[v] + res.s[v]) / tau - c[v]));
        }
        res.primal_obj = dot(c, res.x) / tau;
        res.dual_obj = dot(b, res.y) / tau;
        res.rel_p = rp_inf / (1.0 + bnorm);
        res.rel_d = rd_inf / (1.0 + cnorm);
        res.rel_gap = std::abs(res.primal_obj - res.dual_obj) / (1.0 + std::abs(res.dual_obj));
    };

    for (int iter = 0; iter <= options.max_iters; ++iter) {
        scaled_residuals();
        if (options.want_log) {
            char line[160];
            std::snprintf(line, sizeof(line), "%4d %11.4e %11.4e %11.4e %11.4e %11.4e %11.4e\n",
                          iter, mu, res.rel_p, res.rel_d, res.rel_gap, tau, kappa);
            log << line;
        }
        res.iterations = iter;
        if (res.rel_p <= options.tol_p && res.rel_d <= options.tol_d &&
            res.rel_gap <= options.tol_g) {
            res.status = LpStatus::optimal;
            break;
        }
        // Infeasibility: tau collapses relative to kappa once the embedding
        // has converged to a certificate.
        if (mu <= 1e-10 * mu0 && tau <= 1e-10 * std::max(1.0, kappa)) {
            const double by = dot(b, res.y);
            const double cx = dot(c, res.x);
            res.status = by > 1e-12 ? LpStatus::infeasible
                                    : (cx < -1e-12 ? LpStatus::unbounded : LpStatus::unconverged);
            break;
        }
        const bool acceptable = res.rel_p <= options.accept_p && res.rel_d <= options.accept_d &&
                                res.rel_gap <= options.accept_g;
        if (iter == options.max_iters) {
            res.status = acceptable ? LpStatus::optimal : LpStatus::unconverged;
            break;
        }
        if (mu < 0.9 * best_mu) {
            best_mu = mu;
            stall = 0;
        } else if (++stall > 25) {
            res.status = acceptable ? LpStatus::optimal : LpStatus::unconverged;
            break;
        }

        // Unscaled embedding residuals.
        mat_vec(a, res.x.data(), ax.data());
        mat_t_vec(a, res.y.data(), aty.data(), exec);
        for (int r = 0; r < me; ++r) rp[r] = b[r] * tau - ax[r];
        for (int v = 0; v < n; ++v) rd[v] = c[v] * tau - aty[v] - res.s[v];
        const double rg = kappa + dot(c, res.x) - dot(b, res.y);

        for (int v = 0; v < n; ++v) {
            d[v] = std::clamp(res.x[v] / res.s[v], 1e-24, 1e24);
        }
        build_normal_matrix(a, rv, d.data(), m_dense, exec);
        solver.factorize(m_dense, exec);

        // u = M^{-1} (A D c + b), shared by both directions this iteration.
        a_d_vec(a, rv, d.data(), c.data(), w.data(), exec);
        for (int r = 0; r < me; ++r) rhs[r] = w[r] + b[r];
        solver.solve(rhs, u);

        auto direction = [&](double eta, const Vec& rxs, double rtk) {
            for (int v = 0; v < n; ++v) h[v] = rxs[v] / res.x[v] - eta * rd[v];
            a_d_vec(a, rv, d.data(), h.data(), rhs.data(), exec);
            for (int r = 0; r < me; ++r) rhs[r] = eta * rp[r] - rhs[r];
            solver.solve(rhs, v1);
            double cdh = 0.0, cdc = 0.0;
            for (int v = 0; v < n; ++v) {
                cdh += c[v] * d[v] * h[v];
                cdc += c[v] * d[v] * c[v];
            }
            const double denom = dot(w, u) - dot(b, u) - cdc - kappa / tau;
            double numer = -eta * rg - cdh - rtk / tau;
            for (int r = 0; r < me; ++r) numer -= (w[r] - b[r]) * v1[r];
            const double dtau = numer / denom;
            for (int r = 0; r < me; ++r) dy[r] = v1[r] + u[r] * dtau;
            mat_t_vec(a, dy.data(), aty.data(), exec);
            for (int v = 0; v < n; ++v) dx[v] = d[v] * (aty[v] - c[v] * dtau + h[v]);
            for (int v = 0; v < n; ++v) ds[v] = (rxs[v] - res.s[v] * dx[v]) / res.x[v];
            const double dkappa = (rtk - kappa * dtau) / tau;
            return std::pair<double, double>(dtau, dkappa);
        };

        // Predictor.
        for (int v = 0; v < n; ++v) xs_target[v] = -res.x[v] * res.s[v];
        auto [dtau_a, dk0] = direction(1.0, xs_target, -tau * kappa);
        double alpha_aff = std::min(step_limit(res.x, dx), step_limit(res.s, ds));
        if (dtau_a < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtau_a);
        if (dk0 < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dk0);
        alpha_aff = std::min(alpha_aff, 1.0);

        double mu_aff = 0.0;
        for (int v = 0; v < n; ++v) {
            mu_aff += (res.x[v] + alpha_aff * dx[v]) * (res.s[v] + alpha_aff * ds[v]);
        }
        mu_aff += (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dk0);
        mu_aff /= (n + 1);
        double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
        sigma = std::clamp(sigma, 1e-8, 0.99);

        dxa = dx;
        dsa = ds;
        const double dtau_aff = dtau_a, dkappa_aff = dk0;

        // Corrector.
        for (int v = 0; v < n; ++v) {
            xs_target[v] = sigma * mu - res.x[v] * res.s[v] - dxa[v] * dsa[v];
        }
        auto [dtau, dkappa] =
            direction(1.0 - sigma, xs_target, sigma * mu - tau * kappa - dtau_aff * dkappa_aff);

        double alpha = std::min(step_limit(res.x, dx), step_limit(res.s, ds));
        if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
        if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
        alpha = std::min(options.step_frac * alpha, 1.0);

        for (int v = 0; v < n; ++v) {
            res.x[v] += alpha * dx[v];
            res.s[v] += alpha * ds[v];
        }
        for (int r = 0; r < me; ++r) res.y[r] += alpha * dy[r];
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        mu = (dot(res.x, res.s) + tau * kappa) / (n + 1);
    }

    if (res.status == LpStatus::optimal || res.status == LpStatus::unconverged) {
        scaled_residuals();
    }
    res.log = log.str();
    return res;
}

} // namespace lyap
