#pragma once

#include <string>

#include "lyap/lp.hpp"

namespace lyap {

struct IpmOptions {
    double tol_p = 1e-10;
    double tol_d = 1e-10;
    double tol_g = 1e-10;
    // Looser levels that still count as optimal when progress stalls before
    // the targets above are met; status reports what was actually achieved.
    double accept_p = 1e-10;
    double accept_d = 1e-10;
    double accept_g = 1e-10;
    int max_iters = 200;
    double step_frac = 0.9995;
    Exec exec = Exec::parallel;
    bool want_log = true;
};

struct IpmResult {
    LpStatus status = LpStatus::unconverged;
    Vec x, y, s;
    double tau = 1.0;
    double kappa = 1.0;
    int iterations = 0;
    double rel_p = 0.0;
    double rel_d = 0.0;
    double rel_gap = 0.0;
    double primal_obj = 0.0;  // c'x / tau
    double dual_obj = 0.0;    // b'y / tau
    std::string log;
};

/// Mehrotra predictor-corrector on the homogeneous self-dual embedding.
/// Normal equations are assembled densely and factored with the blocked
/// Cholesky, which bounds practical problem size to a few thousand rows.
/// Infeasible and unbounded problems terminate with certificates in
/// (y, kappa) resp. (x, kappa) instead of failing.
IpmResult ipm_solve(const SparseColumns& a, const Vec& b, const Vec& c,
                    const IpmOptions& options = {});

} // namespace lyap
