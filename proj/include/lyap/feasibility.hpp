#pragma once

#include <string>
#include <vector>

#include "lyap/transition.hpp"

namespace lyap {

enum class FeasibilityStatus {
    stabilizable,
    partially_stabilizable,
};

/// Output of the backward tree-growing pass. layers[0] holds the attractor
/// macro-cell; layers[L+1] holds the cells first reached at depth L+1. The
/// layers list is authoritative: lmax() is the index of the last layer.
struct FeasibilityResult {
    FeasibilityStatus status = FeasibilityStatus::partially_stabilizable;
    std::vector<std::vector<int>> layers;
    std::vector<int> assignment;         // cell -> action, -1 where undefined
    std::vector<int> unstabilizable;     // ascending cell indices

    int lmax() const { return int(layers.size()) - 1; }
    bool stabilizable() const { return status == FeasibilityStatus::stabilizable; }
};

/// Grows layers backwards from the attractor: a cell joins the next layer
/// under the smallest action with positive (> 1e-12) one-step probability
/// into the previous layer. Terminates when every cell is layered or a pass
/// adds nothing; leftover cells are reported, not an error.
FeasibilityResult grow_tree(const TransitionFamily& family);

/// Assembles the closed-loop restriction from a feasibility assignment
/// (row i taken from sub[assignment[i]]).
CsrMatrix closed_loop_from_assignment(const TransitionFamily& family,
                                      const std::vector<int>& assignment);

struct TransienceReport {
    int lmax = 0;
    int horizon = 0;
    std::vector<double> norms;     // ||(P1)^{k lmax}||_inf for k = 1..horizon
    double mass_before = 0.0;      // 1' mu0, uniform mu0
    double mass_after = 0.0;       // 1' (P1)^{lmax} mu0
    bool strictly_decreasing = false;
    bool mass_decreased = false;
    double final_norm = 0.0;
};

/// Verifies the transience of the closed loop built from a tree-growing
/// assignment: the infinity norms of (P1)^{k lmax} must fall monotonically
/// toward zero and one lmax-block must already shrink a uniform initial
/// distribution. Horizon 0 picks ceil(200 / lmax).
/// Throws std::invalid_argument when the result is not stabilizable.
TransienceReport transience_certificate(const TransitionFamily& family,
                                        const FeasibilityResult& result, int horizon = 0);

/// Structured text report: layers, assignment table, unstabilizable set
/// (1-based cell indices).
std::string feasibility_report(const FeasibilityResult& result);

} // namespace lyap
