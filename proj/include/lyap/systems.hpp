#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lyap/linalg.hpp"

namespace lyap {

/// Axis-aligned state box. Wrapped dimensions are periodic: values are
/// folded into [lower, upper) before any cell lookup.
struct StateBox {
    Vec lower;
    Vec upper;
    std::vector<bool> wrap;

    int dimension() const { return int(lower.size()); }
    void validate() const;

    /// Folds wrapped coordinates into [lower, upper); a value exactly at the
    /// upper edge folds to the lower edge. Non-wrapped coordinates pass
    /// through unchanged.
    Vec fold(Vec x) const;

    /// True when x lies in the box after folding (non-wrapped dimensions use
    /// the half-open convention [lower, upper)).
    bool contains(const Vec& x) const;
};

/// A controlled discrete-time map on a state box. `map` must be total and
/// deterministic; outputs are folded into the box on wrapped dimensions by
/// evaluate().
struct SystemDef {
    int dimension = 0;
    int control_dimension = 0;
    StateBox state_box;
    std::function<Vec(const Vec& x, const Vec& u)> map;
    std::string name;
};

struct StandardMapParams {
    double K = 0.25;
};

/// The controlled standard (Chirikov) map on the unit torus:
///   x' = x + y + K u sin(2 pi x)   (mod 1)
///   y' = y + K u sin(2 pi x)       (mod 1)
SystemDef standard_map(StandardMapParams params = {});

/// T(x, u) = x on the given box; control is ignored.
SystemDef identity_system(StateBox box);

/// T(x, u) = x + u (folded); the control is the displacement.
SystemDef shift_system(StateBox box);

/// Applies the system map with domain checking and folding.
/// Throws std::domain_error when x violates a non-wrapped bound and
/// std::invalid_argument on a control dimension mismatch.
Vec evaluate(const SystemDef& system, const Vec& x, const Vec& u);

/// A system given directly as one row-stochastic matrix per control value,
/// bypassing geometry. By convention the last cell is the absorbing
/// attractor macro-cell. Used for small deterministic oracle instances.
struct ExplicitSystem {
    int n_cells = 0;                  // N
    std::vector<CsrMatrix> matrices;  // M stochastic N x N matrices
    std::vector<Vec> control_labels;  // M control vectors (reporting only)
};

/// Validates and packages explicit matrices. Rows must sum to 1 within
/// 1e-12 with nonnegative entries; violations name the action, row and sum.
ExplicitSystem explicit_matrix_system(std::vector<CsrMatrix> matrices,
                                      std::vector<Vec> control_labels = {});

} // namespace lyap
