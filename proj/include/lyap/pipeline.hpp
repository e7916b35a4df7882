#pragma once

#include <filesystem>
#include <optional>

#include "lyap/config.hpp"

namespace lyap {

enum class ExitCode : int {
    ok = 0,
    failure = 1,
    config_error = 2,
    lp_infeasible = 3,
    partial_stabilizability = 4,
    certificate_failure = 5,
};

enum class PipelineStage {
    discretize,  // stop after the transition export
    solve,       // everything except simulation
    full,
};

struct PipelineOptions {
    PipelineStage stage = PipelineStage::full;
    std::optional<std::filesystem::path> out_dir;  // overrides the config
    std::optional<std::uint64_t> seed;             // overrides the config
    bool force = false;                            // allow writing into a non-empty dir
    int log_level = 1;                             // 0 errors, 1 info, 2 debug
};

/// End-to-end driver: discretize, feasibility, LP, synthesis, certification,
/// simulation; writes all artifact files into the output directory. Artifact
/// files never contain wall-clock data, so reruns are byte-identical.
ExitCode run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

/// Rollout under a policy loaded from a policy.csv produced by run/solve.
ExitCode run_simulate_only(const RunConfig& config, const std::filesystem::path& policy_file,
                           const PipelineOptions& options = {});

} // namespace lyap
