#include <cstdint>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lyap/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool force = false;
    std::string log_level = "info";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("config", args.config_path, "run configuration (JSON)")->required();
    cmd->add_option("--out-dir", args.out_dir, "override the output directory");
    cmd->add_option("--seed", args.seed, "override the sampling seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_flag("--force", args.force, "write into a non-empty output directory");
    cmd->add_option("--log-level", args.log_level, "quiet|info|debug")
        ->check(CLI::IsMember({"quiet", "info", "debug"}));
}

lyap::PipelineOptions to_options(const CommonArgs& args, lyap::PipelineStage stage) {
    lyap::PipelineOptions opt;
    opt.stage = stage;
    if (!args.out_dir.empty()) opt.out_dir = args.out_dir;
    if (args.seed_set) opt.seed = args.seed;
    opt.force = args.force;
    opt.log_level = args.log_level == "quiet" ? 0 : (args.log_level == "debug" ? 2 : 1);
    return opt;
}

int run_stage(const CommonArgs& args, lyap::PipelineStage stage) {
    try {
        const lyap::RunConfig config = lyap::load_config(args.config_path);
        return int(lyap::run_pipeline(config, to_options(args, stage)));
    } catch (const lyap::ConfigError& e) {
        std::fprintf(stderr, "[lyapctl] config error: %s\n", e.what());
        return int(lyap::ExitCode::config_error);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "[lyapctl] error: %s\n", e.what());
        return int(lyap::ExitCode::failure);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lyapctl - optimal a.e. stabilization via Lyapunov measures"};
    app.require_subcommand(1);

    CommonArgs run_args, disc_args, solve_args, sim_args;
    std::string policy_file;

    CLI::App* run = app.add_subcommand("run", "full pipeline: discretize, solve, simulate");
    add_common(run, run_args);
    CLI::App* disc = app.add_subcommand("discretize", "build and export the transition family");
    add_common(disc, disc_args);
    CLI::App* solve = app.add_subcommand("solve", "pipeline without the simulation stage");
    add_common(solve, solve_args);
    CLI::App* sim = app.add_subcommand("simulate", "closed-loop rollout under a saved policy");
    add_common(sim, sim_args);
    sim->add_option("--policy", policy_file, "policy.csv from a previous run")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return run_stage(run_args, lyap::PipelineStage::full);
    if (disc->parsed()) return run_stage(disc_args, lyap::PipelineStage::discretize);
    if (solve->parsed()) return run_stage(solve_args, lyap::PipelineStage::solve);
    if (sim->parsed()) {
        try {
            const lyap::RunConfig config = lyap::load_config(sim_args.config_path);
            return int(lyap::run_simulate_only(config, policy_file,
                                               to_options(sim_args, lyap::PipelineStage::full)));
        } catch (const lyap::ConfigError& e) {
            std::fprintf(stderr, "[lyapctl] config error: %s\n", e.what());
            return int(lyap::ExitCode::config_error);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "[lyapctl] error: %s\n", e.what());
            return int(lyap::ExitCode::failure);
        }
    }
    return 0;
}
