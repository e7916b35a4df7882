#include "lyap/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lyap/text_io.hpp"

namespace lyap {

namespace {

// Solves (I - gamma A') x = rhs; direct for small instances, BiCGSTAB with a
// final residual check beyond the direct ceiling.
Vec solve_shifted_transpose(const CsrMatrix& a, double gamma, const Vec& rhs,
                            const SynthesisTolerances& tol, double* residual_out) {
    const int n = a.rows;
    Vec x(n, 0.0);
    if (n <= tol.direct_solve_max_cells) {
        DenseMatrix sys(n, n);
        for (int i = 0; i < n; ++i) {
            // column i of A' is row i of A
            for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
                sys(a.col_idx[k], i) -= gamma * a.vals[k];
            }
            sys(i, i) += 1.0;
        }
        std::vector<int> perm;
        if (!lu_factor(sys, perm, Exec::parallel)) {
            throw std::runtime_error("lyapunov solve: singular system (I - gamma P')");
        }
        x = rhs;
        lu_solve(sys, perm, x);
    } else {
        std::vector<double> history;
        if (!bicgstab_shifted_transpose(a, gamma, rhs, x, tol.linear_solve_residual,
                                        10 * n, &history)) {
            std::ostringstream ss;
            ss << "lyapunov solve: iterative solver stalled; residual history:";
            for (double h : history) ss << ' ' << h;
            throw std::runtime_error(ss.str());
        }
    }
    // Report the true sparse residual regardless of the solve path.
    Vec tmp(n);
    csr_matvec_transpose(a, x, tmp);
    double r = 0.0;
    for (int i = 0; i < n; ++i) r = std::max(r, std::abs(x[i] - gamma * tmp[i] - rhs[i]));
    if (residual_out) *residual_out = r;
    return x;
}

} // namespace

ControlPolicy extract_policy(const StabilizationLp& spec, const LpSolution& solution,
                             double theta_support_tol) {
    if (solution.status != LpStatus::optimal) {
        throw std::invalid_argument("extract_policy: LP solution is not optimal");
    }
    const int ns = spec.n_sub();
    const int na = spec.n_actions();
    ControlPolicy policy;
    policy.action_of.assign(ns, -1);
    for (int j = 0; j < ns; ++j) {
        for (int a = 0; a < na; ++a) {
            if (solution.theta[a][j] > theta_support_tol) {
                policy.action_of[j] = a;
                break;
            }
        }
        if (policy.action_of[j] < 0 && spec.m[j] > 0.0) {
            throw std::runtime_error("extract_policy: cell " + std::to_string(j + 1) +
                                     " has no supported action (support tolerance " +
                                     fmt_double(theta_support_tol) + ")");
        }
    }
    std::vector<std::vector<std::pair<int, double>>> rows(ns);
    policy.closed_loop_cost.assign(ns, 0.0);
    for (int j = 0; j < ns; ++j) {
        if (policy.action_of[j] < 0) continue;  // masked cell: zero row
        const CsrMatrix& p = spec.family->sub[policy.action_of[j]];
        for (int k = p.row_ptr[j]; k < p.row_ptr[j + 1]; ++k) {
            rows[j].emplace_back(p.col_idx[k], p.vals[k]);
        }
        policy.closed_loop_cost[j] = spec.cost[policy.action_of[j]][j];
    }
    policy.closed_loop_sub = CsrMatrix::from_rows(ns, rows);
    return policy;
}

ThetaTilde theta_tilde(const StabilizationLp& spec, const ControlPolicy& policy,
                       const SynthesisTolerances& tol) {
    const int ns = spec.n_sub();
    double resid = 0.0;
    const Vec w = solve_shifted_transpose(policy.closed_loop_sub, spec.gamma, spec.m, tol, &resid);
    for (double v : w) {
        if (!std::isfinite(v)) {
            throw std::runtime_error("theta_tilde: non-finite solve result");
        }
    }
    ThetaTilde out;
    out.theta.assign(spec.n_actions(), Vec(ns, 0.0));
    for (int j = 0; j < ns; ++j) {
        if (policy.action_of[j] >= 0) out.theta[policy.action_of[j]][j] = w[j];
    }
    out.objective = dot(policy.closed_loop_cost, w);
    return out;
}

LyapunovMeasure lyapunov_measure(const StabilizationLp& spec, const ControlPolicy& policy,
                                 const SynthesisTolerances& tol) {
    LyapunovMeasure lm;
    lm.mu = solve_shifted_transpose(policy.closed_loop_sub, spec.gamma, spec.m, tol,
                                    &lm.residual);
    return lm;
}

StabilityCertificate certify(const StabilizationLp& spec, const ControlPolicy& policy,
                             const LpSolution& solution, const SynthesisTolerances& tol) {
    StabilityCertificate cert;
    cert.gamma = spec.gamma;
    const PowerIterationResult pr = power_iteration_spectral_radius(policy.closed_loop_sub);
    cert.spectral_radius_estimate = pr.spectral_radius;
    cert.power_iterations = pr.iterations;
    cert.power_converged = pr.converged;
    cert.margin = 1.0 / spec.gamma - pr.spectral_radius;
    cert.duality_gap = std::abs(solution.primal_objective - solution.dual_objective);

    double theta_check = std::numeric_limits<double>::infinity();
    if (cert.margin > 0.0) {
        const ThetaTilde tt = theta_tilde(spec, policy, tol);
        theta_check = std::abs(tt.objective - dot(spec.m, solution.V));
    }
    cert.theta_tilde_check = theta_check;

    const double gap_scale = 1.0 + std::abs(solution.dual_objective);
    cert.valid = pr.converged && cert.margin > tol.rho_tol &&
                 cert.duality_gap <= tol.duality_tol * gap_scale &&
                 cert.theta_tilde_check <= tol.duality_tol * gap_scale;
    return cert;
}

ValueConsistencyReport value_consistency(const StabilizationLp& spec,
                                         const ControlPolicy& policy, const Vec& v,
                                         const SynthesisTolerances& tol) {
    const int ns = spec.n_sub();
    ValueConsistencyReport rep;
    Vec pv(ns);
    csr_matvec(policy.closed_loop_sub, v, pv);
    for (int j = 0; j < ns; ++j) {
        if (policy.action_of[j] < 0) continue;  // value undefined off the support
        rep.fixed_point_residual =
            std::max(rep.fixed_point_residual,
                     std::abs(v[j] - spec.gamma * pv[j] - policy.closed_loop_cost[j]));
    }
    // Truncated Neumann sum: term_{k+1} = gamma P term_k starting from G^u.
    Vec term = policy.closed_loop_cost;
    Vec sum = term;
    Vec tmp(ns);
    const int max_terms = 200000;
    int k = 1;
    for (; k < max_terms; ++k) {
        csr_matvec(policy.closed_loop_sub, term, tmp);
        for (int j = 0; j < ns; ++j) term[j] = spec.gamma * tmp[j];
        double tn = norm_inf(term);
        if (tn == 0.0) break;
        for (int j = 0; j < ns; ++j) sum[j] += term[j];
        if (tn <= 1e-13 * (1.0 + norm_inf(sum))) break;
    }
    rep.neumann_terms = k;
    for (int j = 0; j < ns; ++j) {
        if (policy.action_of[j] < 0) continue;
        rep.neumann_residual = std::max(rep.neumann_residual, std::abs(sum[j] - v[j]));
    }
    const double scale = 1.0 + norm_inf(v);
    rep.within_tol = rep.fixed_point_residual <= tol.kkt_tol * scale &&
                     rep.neumann_residual <= 1e-6 * scale;
    return rep;
}

std::string policy_csv(const StabilizationLp& spec, const ControlPolicy& policy, const Vec& v,
                       const Vec& mu, const Partition* partition, const ControlGrid* grid) {
    const int ns = spec.n_sub();
    std::ostringstream out;
    out << "cell";
    const int q = partition ? partition->dimension() : 0;
    for (int d = 0; d < q; ++d) out << ",center_x" << d;
    out << ",action";
    const int cd = grid && !grid->values.empty() ? int(grid->values.front().size()) : 0;
    for (int d = 0; d < cd; ++d) out << ",u" << d;
    out << ",V,mu\n";
    for (int j = 0; j < ns; ++j) {
        out << j + 1;
        if (partition) {
            const Vec ctr = partition->cell_center(j);
            for (double x : ctr) out << ',' << fmt_double(x);
        }
        // unassigned (masked) cells write action 0 and zero controls
        out << ',' << policy.action_of[j] + 1;
        if (grid) {
            const int cd = int(grid->values.front().size());
            for (int d = 0; d < cd; ++d) {
                out << ','
                    << fmt_double(policy.action_of[j] >= 0
                                      ? grid->values[policy.action_of[j]][d]
                                      : 0.0);
            }
        }
        out << ',' << fmt_double(v[j]) << ',' << fmt_double(mu[j]) << '\n';
    }
    return out.str();
}

std::string measure_csv(const Vec& mu, const Partition* partition) {
    std::ostringstream out;
    out << "cell";
    const int q = partition ? partition->dimension() : 0;
    for (int d = 0; d < q; ++d) out << ",center_x" << d;
    out << ",mu\n";
    for (std::size_t j = 0; j < mu.size(); ++j) {
        out << j + 1;
        if (partition) {
            const Vec ctr = partition->cell_center(int(j));
            for (double x : ctr) out << ',' << fmt_double(x);
        }
        out << ',' << fmt_double(mu[j]) << '\n';
    }
    return out.str();
}

} // namespace lyap
