#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lyap/partition.hpp"
#include "lyap/synthesis.hpp"
#include "lyap/systems.hpp"

namespace lyap {

enum class InitialConditions {
    cell_centers,
    seeded_uniform,
};

struct RolloutConfig {
    InitialConditions initial_conditions = InitialConditions::cell_centers;
    int sample_count = 0;  // for seeded_uniform
    std::uint64_t seed = 0;
    int horizon = 500;
    double epsilon_radius = 0.0;  // sup-norm dilation of the attractor cells
    bool store_trajectories = false;
};

enum class TrajectoryOutcome {
    absorbed,     // entered U(epsilon)
    surviving,    // still outside at the horizon
    lost,         // reached a cell with no assigned action
};

struct TrajectoryRecord {
    int id = 0;
    TrajectoryOutcome outcome = TrajectoryOutcome::surviving;
    int steps = 0;  // steps taken until absorption/loss, horizon if surviving
    std::vector<Vec> states;        // filled only when store_trajectories
    std::vector<int> cells;
    std::vector<int> actions;
};

struct DecayReport {
    std::vector<std::int64_t> survival_counts;  // index n-1: not yet absorbed at step n
    double fitted_beta = 0.0;
    double fitted_m = 0.0;
    double fraction_stabilized = 0.0;
    std::int64_t total_trajectories = 0;
    std::int64_t lost_trajectories = 0;
};

struct RolloutResult {
    DecayReport report;
    std::vector<TrajectoryRecord> trajectories;  // empty unless stored
};

/// Rolls the true map under the cell-indexed policy. Trajectories stop when
/// they enter U(epsilon); cells without an assigned action mark the
/// trajectory lost (counted in the denominator of fraction_stabilized but
/// excluded from the geometric fit).
RolloutResult rollout(const SystemDef& system, const Partition& partition,
                      const std::vector<int>& action_of, const ControlGrid& grid,
                      const RolloutConfig& config, Exec exec = Exec::parallel);

/// Least-squares fit of log c_n = log M + n log beta over the positive tail.
void fit_geometric_decay(DecayReport& report);

std::string decay_csv(const DecayReport& report);
std::string decay_summary(const DecayReport& report);
std::string trajectories_csv(const std::vector<TrajectoryRecord>& trajectories);

} // namespace lyap
