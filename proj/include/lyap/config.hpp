#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "lyap/lp.hpp"
#include "lyap/simulate.hpp"
#include "lyap/transition.hpp"

namespace lyap {

/// Raised for malformed or inconsistent run configuration; the CLI maps it
/// to its own exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CostSpec {
    enum class Type { quadratic, tabulated };
    Type type = Type::quadratic;
    Vec state_weights;        // quadratic: per state coordinate
    Vec control_weights;      // quadratic: per control coordinate
    std::vector<Vec> table;   // tabulated: one vector of length N-1 per action
};

/// G(center, u) for the quadratic form; tabulated costs are looked up by
/// (action, cell) elsewhere. Throws ConfigError on negative weights.
double cost_eval(const CostSpec& spec, const Vec& center, const Vec& u);

/// Builds the per-action cost vectors G^a at the cell centers (or from the
/// table), validating shape and nonnegativity.
std::vector<Vec> build_cost_vectors(const CostSpec& spec, const Partition* partition,
                                    const ControlGrid& grid, int n_sub);

struct RunConfig {
    // system block
    std::string system_name;
    double standard_map_k = 0.25;
    StateBox box;  // synthetic geometric systems
    std::vector<CsrMatrix> explicit_matrices;
    std::vector<Vec> explicit_labels;

    // partition block (geometric systems)
    std::vector<int> cells_per_dim;
    std::vector<Vec> attractor_points;

    // control block
    ControlGrid grid;

    // discretization block
    int samples_per_cell = 10;
    SamplingMode sampling_mode = SamplingMode::stratified_grid;
    std::uint64_t seed = 0;

    // lp block
    double gamma = 1.01;
    CostSpec cost;
    Vec explicit_m;  // measure vector for explicit systems
    LpTolerances tolerances;
    bool run_feasibility_phase = false;

    // simulate block
    RolloutConfig rollout;
    bool simulate_enabled = true;

    // output block
    std::string out_dir = "out";
    bool write_trajectories = false;
    bool export_lp_instance = false;

    bool is_explicit() const { return system_name == "explicit"; }
};

/// Parses and validates the JSON run configuration (see README for the
/// schema). The control grid accepts the range notation "lo:step:hi".
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

} // namespace lyap
