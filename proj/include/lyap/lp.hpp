#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lyap/transition.hpp"

namespace lyap {

/// Column-compressed sparse matrix for LP constraint data.
struct SparseColumns {
    int rows = 0;
    int cols = 0;
    std::vector<int> col_ptr;  // size cols+1
    std::vector<int> row_idx;
    std::vector<double> vals;

    std::size_t nnz() const { return vals.size(); }
};

/// Standard-form linear program: min c'x s.t. A x = b, x >= 0.
struct LpProblem {
    SparseColumns a;
    Vec b;
    Vec c;
    std::string name;
};

struct LpTolerances {
    double feas_tol = 1e-8;
    double kkt_tol = 1e-7;
    double duality_tol = 1e-6;
    double theta_support_tol = 1e-9;
    double ipm_tol = 1e-10;      // internal target, tighter than the contract
    int max_iterations = 200;
};

/// LP data for the stabilization program: decay parameter, cell measure,
/// per-action cost vectors and the transition family restrictions.
/// The family pointer is non-owning; the caller keeps it alive.
struct StabilizationLp {
    double gamma = 1.01;
    Vec m;
    std::vector<Vec> cost;  // G^a, one per action
    const TransitionFamily* family = nullptr;

    int n_sub() const { return family->n_cells - 1; }
    int n_actions() const { return family->n_actions(); }
    void validate() const;
};

enum class LpStatus {
    optimal,
    infeasible,
    unbounded,
    unconverged,
};

std::string to_string(LpStatus status);

struct KktResiduals {
    double equality = 0.0;         // max |sum_a theta^a - gamma sum_a P' theta^a - m|
    double dual_violation = 0.0;   // max (V - gamma P V - G)_+
    double complementarity = 0.0;  // max |theta^a_j * slack^a_j|
};

struct LpSolution {
    LpStatus status = LpStatus::unconverged;
    std::vector<Vec> theta;  // per action, empty unless a stabilization solve
    Vec x;                   // raw decision vector of the solved LP
    Vec V;                   // equality multipliers
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    KktResiduals kkt;
    int iterations = 0;
    double rel_primal = 0.0;
    double rel_dual = 0.0;
    double rel_gap = 0.0;
    std::string log;
    Vec farkas_y;  // infeasibility certificate: A'y <= 0, b'y = 1
    Vec ray_x;     // unboundedness certificate: A x = 0, c'x < 0, x >= 0
};

/// Builds the primal program: variables are the stacked (theta^1..theta^M),
/// equality rows are sum_a theta^a - gamma sum_a (P1_a)' theta^a = m.
LpProblem assemble_primal(const StabilizationLp& spec);

/// Builds the dual max m'V s.t. V <= gamma P1_a V + G^a as a standard-form
/// minimization (V split into positive/negative parts plus slacks). Intended
/// for cross-checks on small instances; extract V with dual_variables().
LpProblem assemble_dual(const StabilizationLp& spec);
Vec dual_variables(const StabilizationLp& spec, const Vec& dual_x);
double dual_objective_value(const StabilizationLp& spec, const Vec& dual_x);

/// Solves a standard-form LP with the built-in interior-point method.
LpSolution solve_lp(const LpProblem& problem, const LpTolerances& tol = {},
                    Exec exec = Exec::parallel);

/// Assembles and solves the stabilization LP, splitting the solution into
/// per-action theta blocks and attaching KKT residuals. When the first solve
/// misses the contract tolerances it is retried once with tighter internal
/// targets before reporting unconverged.
LpSolution solve_stabilization(const StabilizationLp& spec, const LpTolerances& tol = {},
                               Exec exec = Exec::parallel);

/// Recomputes the optimality-system residuals for a claimed solution.
KktResiduals verify_kkt(const StabilizationLp& spec, const LpSolution& solution);

struct FeasibilityPhaseReport {
    Vec residuals;                  // per-cell |constraint residual|
    std::vector<int> masked_cells;  // cells whose m entry was zeroed
    double objective = 0.0;         // attained l1 residual
    bool anything_stabilizable = true;
    StabilizationLp masked_spec;
};

/// The l1 feasibility phase: minimizes the 1-norm of the constraint
/// residuals over theta >= 0 and masks cells whose residual exceeds
/// resid_tol (default 1e-6 * ||m||_inf) out of the measure's support.
FeasibilityPhaseReport feasibility_phase(const StabilizationLp& spec,
                                         double resid_tol = -1.0,
                                         const LpTolerances& tol = {},
                                         Exec exec = Exec::parallel);

/// Plain-text interchange format for cross-checking with external solvers;
/// see README for the grammar. export/import round-trip bit-exactly.
std::string export_lp(const LpProblem& problem);
LpProblem import_lp(const std::string& text);

} // namespace lyap
