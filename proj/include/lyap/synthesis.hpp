#pragma once

#include <string>
#include <vector>

#include "lyap/lp.hpp"

namespace lyap {

/// Deterministic per-cell action choice plus the induced closed-loop
/// restriction and cost vector.
struct ControlPolicy {
    std::vector<int> action_of;  // cell -> action
    CsrMatrix closed_loop_sub;   // row j taken from sub[action_of[j]]
    Vec closed_loop_cost;        // entry j taken from cost[action_of[j]][j]
};

struct LyapunovMeasure {
    Vec mu;
    double residual = 0.0;  // ||gamma P' mu - mu + m||_inf
};

struct StabilityCertificate {
    double spectral_radius_estimate = 0.0;
    double gamma = 0.0;
    double margin = 0.0;  // 1/gamma - rho
    double duality_gap = 0.0;
    double theta_tilde_check = 0.0;  // |theta-tilde objective - m'V|
    int power_iterations = 0;
    bool power_converged = false;
    bool valid = false;
};

struct SynthesisTolerances {
    double rho_tol = 1e-6;
    double duality_tol = 1e-6;
    double kkt_tol = 1e-7;
    double theta_support_tol = 1e-9;
    double linear_solve_residual = 1e-10;
    int direct_solve_max_cells = 5000;
};

/// Applies the min-index rule a(j) = min{a : theta^a_j > support_tol} and
/// assembles the closed loop. A cell with positive measure and no supported
/// action throws std::runtime_error naming the cell (a solver tolerance
/// failure, not a modeling state). Cells masked out of the support
/// (m_j = 0, from the feasibility phase) may carry no action; they stay
/// unassigned (-1) with a zero closed-loop row.
ControlPolicy extract_policy(const StabilizationLp& spec, const LpSolution& solution,
                             double theta_support_tol = 1e-9);

/// The concentrated optimal measure: per-cell values of
/// (I - gamma (P1_u)')^{-1} m placed on the chosen action.
/// Returns the stacked per-action vectors and the attained objective.
struct ThetaTilde {
    std::vector<Vec> theta;  // per action, zero off the chosen one
    double objective = 0.0;
};
ThetaTilde theta_tilde(const StabilizationLp& spec, const ControlPolicy& policy,
                       const SynthesisTolerances& tol = {});

/// Solves (I - gamma (P1_u)') mu = m directly for instances up to
/// direct_solve_max_cells cells, iteratively beyond.
LyapunovMeasure lyapunov_measure(const StabilizationLp& spec, const ControlPolicy& policy,
                                 const SynthesisTolerances& tol = {});

/// Bundles the spectral margin (power iteration), the LP duality gap and the
/// theta-tilde objective consistency. `valid` requires margin > rho_tol,
/// gap within duality_tol and a converged power iteration.
StabilityCertificate certify(const StabilizationLp& spec, const ControlPolicy& policy,
                             const LpSolution& solution, const SynthesisTolerances& tol = {});

struct ValueConsistencyReport {
    double fixed_point_residual = 0.0;  // ||V - gamma P V - G^u||_inf
    double neumann_residual = 0.0;      // ||sum_k (gamma P)^k G^u - V||_inf
    int neumann_terms = 0;
    bool within_tol = false;
};

/// Checks V = gamma P1_u V + G^u and its truncated Neumann expansion.
ValueConsistencyReport value_consistency(const StabilizationLp& spec,
                                         const ControlPolicy& policy, const Vec& v,
                                         const SynthesisTolerances& tol = {});

/// Policy table export: cell index, optional cell-center coordinates, the
/// chosen action and control value, V and mu. Explicit (geometry-free)
/// systems omit the center columns.
std::string policy_csv(const StabilizationLp& spec, const ControlPolicy& policy, const Vec& v,
                       const Vec& mu, const Partition* partition, const ControlGrid* grid);
std::string measure_csv(const Vec& mu, const Partition* partition);

} // namespace lyap
