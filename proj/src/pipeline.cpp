#include "lyap/pipeline.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <sstream>

#include "lyap/feasibility.hpp"
#include "lyap/synthesis.hpp"
#include "lyap/text_io.hpp"

namespace lyap {

namespace {

struct Logger {
    int level;
    void info(const std::string& msg) const {
        if (level >= 1) std::fprintf(stdout, "[lyapctl] %s\n", msg.c_str());
    }
    void debug(const std::string& msg) const {
        if (level >= 2) std::fprintf(stdout, "[lyapctl] %s\n", msg.c_str());
    }
    void error(const std::string& msg) const {
        std::fprintf(stderr, "[lyapctl] error: %s\n", msg.c_str());
    }
};

std::string certificate_report(const StabilityCertificate& cert,
                               const ValueConsistencyReport& vc) {
    std::ostringstream out;
    out << "spectral_radius " << fmt_double(cert.spectral_radius_estimate) << '\n';
    out << "gamma " << fmt_double(cert.gamma) << '\n';
    out << "inv_gamma " << fmt_double(1.0 / cert.gamma) << '\n';
    out << "margin " << fmt_double(cert.margin) << '\n';
    out << "duality_gap " << fmt_double(cert.duality_gap) << '\n';
    out << "theta_tilde_check " << fmt_double(cert.theta_tilde_check) << '\n';
    out << "power_iterations " << cert.power_iterations << '\n';
    out << "power_converged " << (cert.power_converged ? "true" : "false") << '\n';
    out << "value_fixed_point_residual " << fmt_double(vc.fixed_point_residual) << '\n';
    out << "value_neumann_residual " << fmt_double(vc.neumann_residual) << '\n';
    out << "valid " << (cert.valid ? "true" : "false") << '\n';
    return out.str();
}

std::string transience_text(const TransienceReport& rep) {
    std::ostringstream out;
    out << "transience lmax " << rep.lmax << " horizon " << rep.horizon << '\n';
    out << "mass_before " << fmt_double(rep.mass_before) << " mass_after "
        << fmt_double(rep.mass_after) << '\n';
    out << "norms";
    for (double n : rep.norms) out << ' ' << fmt_double(n);
    out << '\n';
    out << "strictly_decreasing " << (rep.strictly_decreasing ? "true" : "false") << '\n';
    return out.str();
}

struct BuiltProblem {
    std::optional<Partition> partition;  // geometric systems
    std::optional<SystemDef> system;
    ControlGrid grid;
    TransitionFamily family;
    StabilizationLp spec;
};

BuiltProblem build_problem(const RunConfig& config, std::uint64_t seed, const Logger& log) {
    BuiltProblem bp;
    if (config.is_explicit()) {
        ExplicitSystem es = explicit_matrix_system(config.explicit_matrices,
                                                   config.explicit_labels);
        bp.grid = config.grid.values.empty() ? ControlGrid{es.control_labels} : config.grid;
        bp.family = family_from_explicit(es);
        const int ns = bp.family.n_cells - 1;
        if (config.explicit_m.empty()) {
            bp.spec.m.assign(ns, 1.0);
        } else if (int(config.explicit_m.size()) == ns) {
            bp.spec.m = config.explicit_m;
        } else {
            throw ConfigError("lp.m must have one entry per non-attractor cell");
        }
    } else {
        SystemDef sys;
        if (config.system_name == "standard_map") {
            sys = standard_map({config.standard_map_k});
        } else if (config.system_name == "identity") {
            sys = identity_system(config.box);
        } else {
            sys = shift_system(config.box);
        }
        bp.partition = build_partition(sys.state_box, config.cells_per_dim,
                                       config.attractor_points);
        log.debug("partition: N = " + std::to_string(bp.partition->n_cells()));
        bp.grid = config.grid;
        if (!bp.grid.values.empty() &&
            int(bp.grid.values.front().size()) != sys.control_dimension) {
            throw ConfigError("control values must match the system control dimension");
        }
        bp.family = build_transition_family(sys, *bp.partition, bp.grid,
                                            config.samples_per_cell, config.sampling_mode, seed);
        bp.system = std::move(sys);
        bp.spec.m = lebesgue_vector(*bp.partition);
    }
    validate_family(bp.family);
    bp.spec.gamma = config.gamma;
    bp.spec.cost = build_cost_vectors(config.cost, bp.partition ? &*bp.partition : nullptr,
                                      bp.grid, bp.family.n_cells - 1);
    return bp;
}

// The cost is not required to vanish at the attractor points; flag it
// instead of failing.
void warn_attractor_cost(const RunConfig& config, const Logger& log) {
    if (config.is_explicit() || config.cost.type != CostSpec::Type::quadratic) return;
    Vec zero_u(config.grid.values.empty() ? 1 : config.grid.values.front().size(), 0.0);
    double gmin = std::numeric_limits<double>::infinity();
    for (const Vec& p : config.attractor_points) {
        gmin = std::min(gmin, cost_eval(config.cost, p, zero_u));
    }
    if (gmin > 1e-9) {
        log.info("warning: cost at the attractor points with u=0 is " + fmt_double(gmin) +
                 " (> 0); proceeding as configured");
    }
}

} // namespace

ExitCode run_pipeline(const RunConfig& config, const PipelineOptions& options) {
    Logger log{options.log_level};
    namespace fs = std::filesystem;
    fs::path out = options.out_dir.value_or(fs::path(config.out_dir));
    try {
        if (fs::exists(out) && !fs::is_empty(out) && !options.force) {
            log.error("output directory " + out.string() +
                      " is not empty (use --force to overwrite)");
            return ExitCode::failure;
        }
        fs::create_directories(out);
    } catch (const fs::filesystem_error& e) {
        log.error(e.what());
        return ExitCode::failure;
    }

    try {
        const std::uint64_t seed = options.seed.value_or(config.seed);
        warn_attractor_cost(config, log);
        log.info("stage discretize: building transition family");
        BuiltProblem bp = build_problem(config, seed, log);
        write_triplets(out / "transitions.txt", bp.family);
        log.info("wrote " + (out / "transitions.txt").string());
        if (options.stage == PipelineStage::discretize) return ExitCode::ok;

        log.info("stage feasibility: growing the stabilization tree");
        const FeasibilityResult feas = grow_tree(bp.family);
        std::string feas_text = feasibility_report(feas);
        if (feas.stabilizable()) {
            feas_text += transience_text(transience_certificate(bp.family, feas));
        }
        write_text_file(out / "feasibility.txt", feas_text);
        bp.spec.family = &bp.family;

        if (!feas.stabilizable() && !config.run_feasibility_phase) {
            log.error("tree growing left " + std::to_string(feas.unstabilizable.size()) +
                      " cells unstabilizable; enable lp.feasibility_phase to mask them");
            return ExitCode::partial_stabilizability;
        }

        if (config.run_feasibility_phase) {
            log.info("stage feasibility_phase: minimizing the l1 constraint residual");
            const FeasibilityPhaseReport phase =
                feasibility_phase(bp.spec, -1.0, config.tolerances);
            std::ostringstream ph;
            ph << "objective " << fmt_double(phase.objective) << '\n';
            ph << "masked_cells";
            if (phase.masked_cells.empty()) ph << " (none)";
            for (int c : phase.masked_cells) ph << ' ' << c + 1;
            ph << '\n';
            ph << "anything_stabilizable " << (phase.anything_stabilizable ? "true" : "false")
               << '\n';
            write_text_file(out / "phase_report.txt", ph.str());
            if (!phase.anything_stabilizable) {
                log.error("feasibility phase masked every cell: nothing stabilizable");
                return ExitCode::lp_infeasible;
            }
            bp.spec.m = phase.masked_spec.m;
            log.info("masked " + std::to_string(phase.masked_cells.size()) + " cells");
        }

        if (config.export_lp_instance) {
            write_text_file(out / "lp_instance.txt", export_lp(assemble_primal(bp.spec)));
        }

        log.info("stage lp: solving the stabilization program");
        const LpSolution sol = solve_stabilization(bp.spec, config.tolerances);
        {
            std::ostringstream lg;
            lg << sol.log;
            lg << "status " << to_string(sol.status) << '\n';
            lg << "iterations " << sol.iterations << '\n';
            lg << "primal_objective " << fmt_double(sol.primal_objective) << '\n';
            lg << "dual_objective " << fmt_double(sol.dual_objective) << '\n';
            lg << "duality_gap " << fmt_double(std::abs(sol.primal_objective -
                                                        sol.dual_objective)) << '\n';
            lg << "kkt_equality " << fmt_double(sol.kkt.equality) << '\n';
            lg << "kkt_dual_violation " << fmt_double(sol.kkt.dual_violation) << '\n';
            lg << "kkt_complementarity " << fmt_double(sol.kkt.complementarity) << '\n';
            write_text_file(out / "lp_log.txt", lg.str());
        }
        if (sol.status == LpStatus::infeasible) {
            log.error("stabilization LP infeasible at gamma = " + fmt_double(config.gamma) +
                      "; consider lp.feasibility_phase or a smaller gamma");
            return ExitCode::lp_infeasible;
        }
        if (sol.status != LpStatus::optimal) {
            log.error("LP solve ended with status " + to_string(sol.status));
            return ExitCode::certificate_failure;
        }
        log.info("LP optimal: objective " + fmt_double(sol.primal_objective) + ", gap " +
                 fmt_double(std::abs(sol.primal_objective - sol.dual_objective)));

        log.info("stage synthesis: extracting the deterministic policy");
        SynthesisTolerances syn;
        syn.duality_tol = config.tolerances.duality_tol;
        syn.kkt_tol = config.tolerances.kkt_tol;
        syn.theta_support_tol = config.tolerances.theta_support_tol;
        const ControlPolicy policy =
            extract_policy(bp.spec, sol, config.tolerances.theta_support_tol);
        const LyapunovMeasure measure = lyapunov_measure(bp.spec, policy, syn);
        const StabilityCertificate cert = certify(bp.spec, policy, sol, syn);
        const ValueConsistencyReport vc = value_consistency(bp.spec, policy, sol.V, syn);

        const Partition* part = bp.partition ? &*bp.partition : nullptr;
        write_text_file(out / "policy.csv",
                        policy_csv(bp.spec, policy, sol.V, measure.mu, part, &bp.grid));
        write_text_file(out / "measure.csv", measure_csv(measure.mu, part));
        write_text_file(out / "certificate.txt", certificate_report(cert, vc));
        log.info("certificate: rho = " + fmt_double(cert.spectral_radius_estimate) +
                 ", margin = " + fmt_double(cert.margin) +
                 (cert.valid ? " (valid)" : " (INVALID)"));

        const bool do_simulate = options.stage == PipelineStage::full &&
                                 config.simulate_enabled && bp.system.has_value();
        if (do_simulate) {
            log.info("stage simulate: closed-loop rollout");
            RolloutConfig rc = config.rollout;
            rc.seed = seed;
            const RolloutResult rr =
                rollout(*bp.system, *bp.partition, policy.action_of, bp.grid, rc);
            write_text_file(out / "decay.csv", decay_csv(rr.report));
            write_text_file(out / "decay_summary.txt", decay_summary(rr.report));
            if (config.write_trajectories) {
                write_text_file(out / "trajectories.csv", trajectories_csv(rr.trajectories));
            }
            log.info("fraction stabilized: " + fmt_double(rr.report.fraction_stabilized));
        }

        if (!cert.valid) {
            log.error("stability certificate invalid");
            return ExitCode::certificate_failure;
        }
        return ExitCode::ok;
    } catch (const ConfigError& e) {
        log.error(e.what());
        return ExitCode::config_error;
    } catch (const std::exception& e) {
        log.error(e.what());
        return ExitCode::failure;
    }
}

ExitCode run_simulate_only(const RunConfig& config, const std::filesystem::path& policy_file,
                           const PipelineOptions& options) {
    Logger log{options.log_level};
    namespace fs = std::filesystem;
    try {
        if (config.is_explicit()) {
            throw ConfigError("simulate: explicit systems have no geometric rollout");
        }
        SystemDef sys;
        if (config.system_name == "standard_map") {
            sys = standard_map({config.standard_map_k});
        } else if (config.system_name == "identity") {
            sys = identity_system(config.box);
        } else {
            sys = shift_system(config.box);
        }
        const Partition partition =
            build_partition(sys.state_box, config.cells_per_dim, config.attractor_points);
        const int n_sub = partition.n_cells() - 1;

        // policy.csv: first column cell (1-based), "action" column 1-based.
        std::vector<int> action_of(n_sub, -1);
        std::istringstream in(read_text_file(policy_file));
        std::string line;
        if (!std::getline(in, line)) throw ConfigError("policy file is empty");
        std::vector<std::string> header;
        {
            std::istringstream hs(line);
            std::string col;
            while (std::getline(hs, col, ',')) header.push_back(col);
        }
        int action_col = -1;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == "action") action_col = int(c);
        }
        if (action_col < 0) throw ConfigError("policy file has no action column");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string tok;
            std::vector<std::string> cols;
            while (std::getline(ls, tok, ',')) cols.push_back(tok);
            const int cell = std::stoi(cols.at(0)) - 1;
            if (cell < 0 || cell >= n_sub) throw ConfigError("policy file: cell out of range");
            // action 0 in the file marks a masked cell with no assignment
            action_of[std::size_t(cell)] = std::stoi(cols.at(std::size_t(action_col))) - 1;
        }

        fs::path out = options.out_dir.value_or(fs::path(config.out_dir));
        fs::create_directories(out);
        RolloutConfig rc = config.rollout;
        rc.seed = options.seed.value_or(config.seed);
        const RolloutResult rr = rollout(sys, partition, action_of, config.grid, rc);
        write_text_file(out / "decay.csv", decay_csv(rr.report));
        write_text_file(out / "decay_summary.txt", decay_summary(rr.report));
        if (config.write_trajectories) {
            write_text_file(out / "trajectories.csv", trajectories_csv(rr.trajectories));
        }
        log.info("fraction stabilized: " + fmt_double(rr.report.fraction_stabilized));
        return ExitCode::ok;
    } catch (const ConfigError& e) {
        log.error(e.what());
        return ExitCode::config_error;
    } catch (const std::exception& e) {
        log.error(e.what());
        return ExitCode::failure;
    }
}

} // namespace lyap
