#include "lyap/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lyap/ipm.hpp"
#include "lyap/text_io.hpp"

namespace lyap {

void StabilizationLp::validate() const {
    if (family == nullptr) throw std::invalid_argument("StabilizationLp: family not set");
    if (!(gamma > 1.0)) {
        throw std::invalid_argument("StabilizationLp: gamma must be > 1");
    }
    if (int(m.size()) != n_sub()) {
        throw std::invalid_argument("StabilizationLp: m has wrong length");
    }
    for (double v : m) {
        if (v < 0.0) throw std::invalid_argument("StabilizationLp: m must be nonnegative");
    }
    if (int(cost.size()) != n_actions()) {
        throw std::invalid_argument("StabilizationLp: one cost vector per action required");
    }
    for (const Vec& g : cost) {
        if (int(g.size()) != n_sub()) {
            throw std::invalid_argument("StabilizationLp: cost vector has wrong length");
        }
        for (double v : g) {
            if (v < 0.0) throw std::invalid_argument("StabilizationLp: costs must be >= 0");
        }
    }
}

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::unconverged: return "unconverged";
    }
    return "?";
}

namespace {

struct ColumnBuilder {
    SparseColumns a;
    explicit ColumnBuilder(int rows) { a.rows = rows; a.col_ptr.push_back(0); }
    void add_column(std::vector<std::pair<int, double>> entries) {
        std::sort(entries.begin(), entries.end());
        for (const auto& [r, v] : entries) {
            a.row_idx.push_back(r);
            a.vals.push_back(v);
        }
        a.col_ptr.push_back(int(a.row_idx.size()));
        ++a.cols;
    }
};

} // namespace

LpProblem assemble_primal(const StabilizationLp& spec) {
    spec.validate();
    const int ns = spec.n_sub();
    const int na = spec.n_actions();
    const double g = spec.gamma;

    LpProblem lp;
    lp.name = "stabilization_primal";
    lp.b = spec.m;
    lp.c.reserve(std::size_t(na) * ns);
    ColumnBuilder cb(ns);
    for (int a = 0; a < na; ++a) {
        const CsrMatrix& p = spec.family->sub[a];
        for (int j = 0; j < ns; ++j) {
            // Column (a, j): identity contribution at row j, minus the
            // discounted one-step image of cell j.
            std::vector<std::pair<int, double>> col;
            bool diag_seen = false;
            for (int k = p.row_ptr[j]; k < p.row_ptr[j + 1]; ++k) {
                const int i = p.col_idx[k];
                double v = -g * p.vals[k];
                if (i == j) {
                    v += 1.0;
                    diag_seen = true;
                }
                col.emplace_back(i, v);
            }
            if (!diag_seen) col.emplace_back(j, 1.0);
            cb.add_column(std::move(col));
            lp.c.push_back(spec.cost[a][j]);
        }
    }
    lp.a = std::move(cb.a);
    return lp;
}

LpProblem assemble_dual(const StabilizationLp& spec) {
    spec.validate();
    const int ns = spec.n_sub();
    const int na = spec.n_actions();
    const double g = spec.gamma;

    // max m'V s.t. (I - gamma P1_a) V <= G^a becomes, with V = Vp - Vn and
    // one slack per inequality row:  min -m'Vp + m'Vn  s.t.
    //   (I - gamma P1_a)(Vp - Vn) + slack_a = G^a.
    LpProblem lp;
    lp.name = "stabilization_dual";
    const int rows = na * ns;
    lp.b.reserve(rows);
    for (int a = 0; a < na; ++a) {
        for (int i = 0; i < ns; ++i) lp.b.push_back(spec.cost[a][i]);
    }
    ColumnBuilder cb(rows);
    // Columns for Vp then Vn: entry at row (a, i) is +/- (delta_ij - g P_a[i][j]).
    for (int sign = 0; sign < 2; ++sign) {
        const double sgn = sign == 0 ? 1.0 : -1.0;
        for (int j = 0; j < ns; ++j) {
            std::vector<std::pair<int, double>> col;
            for (int a = 0; a < na; ++a) {
                const CsrMatrix& p = spec.family->sub[a];
                // Row i of the a-block carries delta_ij - g P_a[i][j].
                for (int i = 0; i < ns; ++i) {
                    const double v = (i == j ? 1.0 : 0.0) - g * p.at(i, j);
                    if (v != 0.0) col.emplace_back(a * ns + i, sgn * v);
                }
            }
            cb.add_column(std::move(col));
            lp.c.push_back(sgn * -spec.m[j]);
        }
    }
    for (int r = 0; r < rows; ++r) {
        cb.add_column({{r, 1.0}});
        lp.c.push_back(0.0);
    }
    lp.a = std::move(cb.a);
    return lp;
}

Vec dual_variables(const StabilizationLp& spec, const Vec& dual_x) {
    const int ns = spec.n_sub();
    Vec v(ns);
    for (int j = 0; j < ns; ++j) v[j] = dual_x[j] - dual_x[ns + j];
    return v;
}

double dual_objective_value(const StabilizationLp& spec, const Vec& dual_x) {
    return dot(spec.m, dual_variables(spec, dual_x));
}

LpSolution solve_lp(const LpProblem& problem, const LpTolerances& tol, Exec exec) {
    IpmOptions opt;
    opt.tol_p = opt.tol_d = opt.tol_g = tol.ipm_tol;
    opt.accept_p = opt.accept_d = std::max(tol.ipm_tol, tol.feas_tol);
    opt.accept_g = std::max(tol.ipm_tol, 0.01 * tol.duality_tol);
    opt.max_iters = tol.max_iterations;
    opt.exec = exec;
    const IpmResult r = ipm_solve(problem.a, problem.b, problem.c, opt);

    LpSolution sol;
    sol.status = r.status;
    sol.iterations = r.iterations;
    sol.rel_primal = r.rel_p;
    sol.rel_dual = r.rel_d;
    sol.rel_gap = r.rel_gap;
    sol.log = r.log;
    if (r.status == LpStatus::optimal || r.status == LpStatus::unconverged) {
        sol.x.resize(r.x.size());
        for (std::size_t v = 0; v < r.x.size(); ++v) sol.x[v] = r.x[v] / r.tau;
        sol.V.resize(r.y.size());
        for (std::size_t i = 0; i < r.y.size(); ++i) sol.V[i] = r.y[i] / r.tau;
        sol.primal_objective = r.primal_obj;
        sol.dual_objective = r.dual_obj;
    } else if (r.status == LpStatus::infeasible) {
        sol.farkas_y = r.y;
        const double by = dot(problem.b, sol.farkas_y);
        if (by > 0.0) {
            for (double& v : sol.farkas_y) v /= by;
        }
    } else if (r.status == LpStatus::unbounded) {
        sol.ray_x = r.x;
    }
    return sol;
}

namespace {

// Residual of the measure equation: sum_a theta^a - gamma sum_a P' theta^a - m.
Vec equality_residual(const StabilizationLp& spec, const std::vector<Vec>& theta) {
    const int ns = spec.n_sub();
    Vec res(ns, 0.0), tmp(ns);
    for (int a = 0; a < spec.n_actions(); ++a) {
        csr_matvec_transpose(spec.family->sub[a], theta[a], tmp);
        for (int j = 0; j < ns; ++j) res[j] += theta[a][j] - spec.gamma * tmp[j];
    }
    for (int j = 0; j < ns; ++j) res[j] -= spec.m[j];
    return res;
}

} // namespace

KktResiduals verify_kkt(const StabilizationLp& spec, const LpSolution& solution) {
    const int ns = spec.n_sub();
    KktResiduals k;
    const Vec eq = equality_residual(spec, solution.theta);
    k.equality = norm_inf(eq);
    Vec pv(ns);
    for (int a = 0; a < spec.n_actions(); ++a) {
        csr_matvec(spec.family->sub[a], solution.V, pv);
        for (int j = 0; j < ns; ++j) {
            const double slack = spec.gamma * pv[j] + spec.cost[a][j] - solution.V[j];
            k.dual_violation = std::max(k.dual_violation, -slack);
            k.complementarity =
                std::max(k.complementarity, std::abs(solution.theta[a][j] * slack));
        }
    }
    k.dual_violation = std::max(k.dual_violation, 0.0);
    return k;
}

LpSolution solve_stabilization(const StabilizationLp& spec, const LpTolerances& tol, Exec exec) {
    spec.validate();
    const LpProblem lp = assemble_primal(spec);

    auto attempt = [&](const LpTolerances& t) {
        LpSolution sol = solve_lp(lp, t, exec);
        if (sol.status == LpStatus::optimal || sol.status == LpStatus::unconverged) {
            const int ns = spec.n_sub();
            sol.theta.assign(spec.n_actions(), Vec(ns, 0.0));
            for (int a = 0; a < spec.n_actions(); ++a) {
                for (int j = 0; j < ns; ++j) sol.theta[a][j] = sol.x[std::size_t(a) * ns + j];
            }
            sol.kkt = verify_kkt(spec, sol);
        }
        return sol;
    };

    LpSolution sol = attempt(tol);
    const auto within_contract = [&](const LpSolution& s) {
        return s.kkt.equality <= tol.feas_tol && s.kkt.dual_violation <= tol.kkt_tol &&
               s.kkt.complementarity <= tol.kkt_tol &&
               std::abs(s.primal_objective - s.dual_objective) <=
                   tol.duality_tol * (1.0 + std::abs(s.dual_objective));
    };
    if (sol.status == LpStatus::optimal && !within_contract(sol)) {
        // One retry with tighter internal targets before giving up.
        LpTolerances tight = tol;
        tight.ipm_tol = tol.ipm_tol * 1e-2;
        tight.max_iterations = tol.max_iterations * 2;
        LpSolution second = attempt(tight);
        if (second.status == LpStatus::optimal && within_contract(second)) return second;
        sol.status = LpStatus::unconverged;
    }
    return sol;
}

FeasibilityPhaseReport feasibility_phase(const StabilizationLp& spec, double resid_tol,
                                         const LpTolerances& tol, Exec exec) {
    spec.validate();
    const int ns = spec.n_sub();
    const int na = spec.n_actions();
    if (resid_tol < 0.0) resid_tol = 1e-6 * std::max(1e-300, norm_inf(spec.m));

    // min 1'p + 1'q  s.t.  sum_a theta^a - gamma sum_a P' theta^a + p - q = m.
    LpProblem lp = assemble_primal(spec);
    lp.name = "stabilization_l1_phase";
    lp.c.assign(lp.c.size(), 0.0);
    for (int j = 0; j < ns; ++j) {
        lp.a.row_idx.push_back(j);
        lp.a.vals.push_back(1.0);
        lp.a.col_ptr.push_back(int(lp.a.row_idx.size()));
        lp.a.cols++;
        lp.c.push_back(1.0);
    }
    for (int j = 0; j < ns; ++j) {
        lp.a.row_idx.push_back(j);
        lp.a.vals.push_back(-1.0);
        lp.a.col_ptr.push_back(int(lp.a.row_idx.size()));
        lp.a.cols++;
        lp.c.push_back(1.0);
    }

    LpSolution sol = solve_lp(lp, tol, exec);
    if (sol.status != LpStatus::optimal) {
        throw std::runtime_error("feasibility_phase: auxiliary LP did not solve (" +
                                 to_string(sol.status) + ")");
    }

    FeasibilityPhaseReport rep;
    rep.objective = sol.primal_objective;
    std::vector<Vec> theta(na, Vec(ns, 0.0));
    for (int a = 0; a < na; ++a) {
        for (int j = 0; j < ns; ++j) theta[a][j] = sol.x[std::size_t(a) * ns + j];
    }
    const Vec eq = equality_residual(spec, theta);
    rep.residuals.resize(ns);
    rep.masked_spec = spec;
    for (int j = 0; j < ns; ++j) {
        rep.residuals[j] = std::abs(eq[j]);
        if (rep.residuals[j] > resid_tol) {
            rep.masked_cells.push_back(j);
            rep.masked_spec.m[j] = 0.0;
        }
    }
    rep.anything_stabilizable = int(rep.masked_cells.size()) < ns;
    return rep;
}

std::string export_lp(const LpProblem& problem) {
    std::ostringstream out;
    out << "lp " << (problem.name.empty() ? "unnamed" : problem.name) << '\n';
    out << "minimize\n";
    out << "vars " << problem.a.cols << '\n';
    out << "rows " << problem.a.rows << '\n';
    out << "bounds nonnegative\n";
    for (int v = 0; v < problem.a.cols; ++v) {
        if (problem.c[v] != 0.0) out << "c " << v + 1 << ' ' << fmt_double(problem.c[v]) << '\n';
    }
    for (int v = 0; v < problem.a.cols; ++v) {
        for (int k = problem.a.col_ptr[v]; k < problem.a.col_ptr[v + 1]; ++k) {
            out << "A " << problem.a.row_idx[k] + 1 << ' ' << v + 1 << ' '
                << fmt_double(problem.a.vals[k]) << '\n';
        }
    }
    for (int r = 0; r < problem.a.rows; ++r) {
        if (problem.b[r] != 0.0) out << "b " << r + 1 << ' ' << fmt_double(problem.b[r]) << '\n';
    }
    out << "end\n";
    return out.str();
}

LpProblem import_lp(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    LpProblem lp;
    int nvars = -1, nrows = -1;
    std::vector<std::vector<std::pair<int, double>>> cols;
    while (std::getline(in, line)) {
        const auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "lp" && toks.size() >= 2) {
            lp.name = toks[1];
        } else if (toks[0] == "vars") {
            nvars = std::stoi(toks.at(1));
            cols.resize(nvars);
            lp.c.assign(nvars, 0.0);
        } else if (toks[0] == "rows") {
            nrows = std::stoi(toks.at(1));
            lp.b.assign(nrows, 0.0);
        } else if (toks[0] == "c") {
            lp.c.at(std::stoi(toks.at(1)) - 1) = std::strtod(toks.at(2).c_str(), nullptr);
        } else if (toks[0] == "A") {
            cols.at(std::stoi(toks.at(2)) - 1)
                .emplace_back(std::stoi(toks.at(1)) - 1, std::strtod(toks.at(3).c_str(), nullptr));
        } else if (toks[0] == "b") {
            lp.b.at(std::stoi(toks.at(1)) - 1) = std::strtod(toks.at(2).c_str(), nullptr);
        } else if (toks[0] == "end") {
            break;
        }
    }
    if (nvars < 0 || nrows < 0) throw std::invalid_argument("import_lp: missing vars/rows");
    lp.a.rows = nrows;
    lp.a.col_ptr.push_back(0);
    for (auto& col : cols) {
        std::sort(col.begin(), col.end());
        for (const auto& [r, v] : col) {
            lp.a.row_idx.push_back(r);
            lp.a.vals.push_back(v);
        }
        lp.a.col_ptr.push_back(int(lp.a.row_idx.size()));
        lp.a.cols++;
    }
    return lp;
}

} // namespace lyap
