#include "lyap/config.hpp"

#include <cmath>

#include <json.hpp>

#include "lyap/text_io.hpp"

namespace lyap {

using nlohmann::json;

double cost_eval(const CostSpec& spec, const Vec& center, const Vec& u) {
    if (spec.type != CostSpec::Type::quadratic) {
        throw ConfigError("cost_eval: pointwise evaluation requires a quadratic cost");
    }
    if (spec.state_weights.size() != center.size()) {
        throw ConfigError("cost: state_weights length must match the state dimension");
    }
    if (spec.control_weights.size() != u.size()) {
        throw ConfigError("cost: control_weights length must match the control dimension");
    }
    double g = 0.0;
    for (std::size_t d = 0; d < center.size(); ++d) {
        if (spec.state_weights[d] < 0.0) throw ConfigError("cost: negative state weight");
        g += spec.state_weights[d] * center[d] * center[d];
    }
    for (std::size_t d = 0; d < u.size(); ++d) {
        if (spec.control_weights[d] < 0.0) throw ConfigError("cost: negative control weight");
        g += spec.control_weights[d] * u[d] * u[d];
    }
    return g;
}

std::vector<Vec> build_cost_vectors(const CostSpec& spec, const Partition* partition,
                                    const ControlGrid& grid, int n_sub) {
    std::vector<Vec> cost;
    if (spec.type == CostSpec::Type::tabulated) {
        if (int(spec.table.size()) != grid.size()) {
            throw ConfigError("cost: tabulated table needs one row per control value");
        }
        for (const Vec& row : spec.table) {
            if (int(row.size()) != n_sub) {
                throw ConfigError("cost: tabulated row length must be the non-attractor "
                                  "cell count (" + std::to_string(n_sub) + ")");
            }
            for (double v : row) {
                if (v < 0.0) throw ConfigError("cost: negative tabulated cost value");
            }
        }
        cost = spec.table;
        return cost;
    }
    if (partition == nullptr) {
        throw ConfigError("cost: quadratic cost needs cell geometry; use a tabulated cost "
                          "for explicit systems");
    }
    cost.assign(grid.size(), Vec(n_sub, 0.0));
    for (int a = 0; a < grid.size(); ++a) {
        for (int j = 0; j < n_sub; ++j) {
            cost[a][j] = cost_eval(spec, partition->cell_center(j), grid.values[a]);
        }
    }
    return cost;
}

namespace {

Vec to_vec(const json& j, const char* what) {
    if (!j.is_array()) throw ConfigError(std::string(what) + ": expected an array");
    Vec v;
    for (const auto& e : j) {
        if (!e.is_number()) throw ConfigError(std::string(what) + ": expected numbers");
        v.push_back(e.get<double>());
    }
    return v;
}

ControlGrid parse_control(const json& j) {
    ControlGrid grid;
    if (j.contains("grid")) {
        const std::string s = j.at("grid").get<std::string>();
        const auto c1 = s.find(':');
        const auto c2 = s.rfind(':');
        if (c1 == std::string::npos || c2 == c1) {
            throw ConfigError("control.grid: expected \"lo:step:hi\"");
        }
        try {
            const double lo = std::stod(s.substr(0, c1));
            const double step = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
            const double hi = std::stod(s.substr(c2 + 1));
            grid = control_grid_from_range(lo, step, hi);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("control.grid: ") + e.what());
        }
    } else if (j.contains("values")) {
        for (const auto& v : j.at("values")) {
            grid.values.push_back(v.is_array() ? to_vec(v, "control.values")
                                               : Vec{v.get<double>()});
        }
        try {
            grid.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("control.values: ") + e.what());
        }
    } else {
        throw ConfigError("control: need either \"grid\" or \"values\"");
    }
    return grid;
}

CsrMatrix parse_matrix(const json& j) {
    std::vector<std::vector<std::pair<int, double>>> rows;
    const int n = int(j.size());
    for (const auto& row : j) {
        if (int(row.size()) != n) throw ConfigError("system.matrices: matrices must be square");
        std::vector<std::pair<int, double>> r;
        int c = 0;
        for (const auto& e : row) {
            const double v = e.get<double>();
            if (v != 0.0) r.emplace_back(c, v);
            ++c;
        }
        rows.push_back(std::move(r));
    }
    return CsrMatrix::from_rows(n, rows);
}

StateBox parse_box(const json& j) {
    StateBox box;
    box.lower = to_vec(j.at("lower"), "system.box.lower");
    box.upper = to_vec(j.at("upper"), "system.box.upper");
    if (j.contains("wrap")) {
        for (const auto& w : j.at("wrap")) box.wrap.push_back(w.get<bool>());
    } else {
        box.wrap.assign(box.lower.size(), false);
    }
    try {
        box.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("system.box: ") + e.what());
    }
    return box;
}

} // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        const json& sys = j.at("system");
        cfg.system_name = sys.at("name").get<std::string>();
        if (cfg.system_name == "standard_map") {
            cfg.standard_map_k = sys.value("K", 0.25);
        } else if (cfg.system_name == "identity" || cfg.system_name == "shift") {
            cfg.box = parse_box(sys.at("box"));
        } else if (cfg.system_name == "explicit") {
            for (const auto& m : sys.at("matrices")) cfg.explicit_matrices.push_back(parse_matrix(m));
            if (sys.contains("labels")) {
                for (const auto& l : sys.at("labels")) {
                    cfg.explicit_labels.push_back(l.is_array() ? to_vec(l, "system.labels")
                                                               : Vec{l.get<double>()});
                }
            }
        } else {
            throw ConfigError("system.name: unknown system \"" + cfg.system_name + "\"");
        }

        if (!cfg.is_explicit()) {
            const json& part = j.at("partition");
            for (const auto& c : part.at("cells_per_dim")) cfg.cells_per_dim.push_back(c.get<int>());
            for (const auto& p : part.at("attractor_points")) {
                cfg.attractor_points.push_back(to_vec(p, "partition.attractor_points"));
            }
            cfg.grid = parse_control(j.at("control"));

            if (j.contains("discretization")) {
                const json& disc = j.at("discretization");
                cfg.samples_per_cell = disc.value("samples_per_cell", 10);
                const std::string mode = disc.value("mode", std::string("stratified_grid"));
                if (mode == "stratified_grid") {
                    cfg.sampling_mode = SamplingMode::stratified_grid;
                } else if (mode == "seeded_random") {
                    cfg.sampling_mode = SamplingMode::seeded_random;
                } else {
                    throw ConfigError("discretization.mode: expected stratified_grid or "
                                      "seeded_random");
                }
                cfg.seed = disc.value("seed", std::uint64_t(0));
                if (cfg.samples_per_cell < 1) {
                    throw ConfigError("discretization.samples_per_cell must be >= 1");
                }
            }
        } else if (j.contains("control")) {
            cfg.grid = parse_control(j.at("control"));
        }

        const json& lp = j.at("lp");
        cfg.gamma = lp.at("gamma").get<double>();
        if (!(cfg.gamma > 1.0)) {
            throw ConfigError("lp.gamma must be > 1 (the finite approximation guarantee "
                              "needs a strict decay margin)");
        }
        if (lp.contains("cost")) {
            const json& cost = lp.at("cost");
            const std::string type = cost.value("type", std::string("quadratic"));
            if (type == "quadratic") {
                cfg.cost.type = CostSpec::Type::quadratic;
                cfg.cost.state_weights = to_vec(cost.at("state_weights"), "lp.cost.state_weights");
                cfg.cost.control_weights =
                    to_vec(cost.at("control_weights"), "lp.cost.control_weights");
            } else if (type == "tabulated") {
                cfg.cost.type = CostSpec::Type::tabulated;
                for (const auto& row : cost.at("values")) {
                    cfg.cost.table.push_back(to_vec(row, "lp.cost.values"));
                }
            } else {
                throw ConfigError("lp.cost.type: expected quadratic or tabulated");
            }
        }
        if (lp.contains("m")) cfg.explicit_m = to_vec(lp.at("m"), "lp.m");
        cfg.run_feasibility_phase = lp.value("feasibility_phase", false);
        if (lp.contains("tolerances")) {
            const json& t = lp.at("tolerances");
            cfg.tolerances.feas_tol = t.value("feas_tol", cfg.tolerances.feas_tol);
            cfg.tolerances.kkt_tol = t.value("kkt_tol", cfg.tolerances.kkt_tol);
            cfg.tolerances.duality_tol = t.value("duality_tol", cfg.tolerances.duality_tol);
            cfg.tolerances.theta_support_tol =
                t.value("theta_support_tol", cfg.tolerances.theta_support_tol);
            cfg.tolerances.ipm_tol = t.value("ipm_tol", cfg.tolerances.ipm_tol);
            cfg.tolerances.max_iterations =
                t.value("max_iterations", cfg.tolerances.max_iterations);
        }

        if (j.contains("simulate")) {
            const json& sim = j.at("simulate");
            cfg.simulate_enabled = sim.value("enabled", true);
            const std::string init = sim.value("initial_conditions", std::string("cell_centers"));
            if (init == "cell_centers") {
                cfg.rollout.initial_conditions = InitialConditions::cell_centers;
            } else if (init == "seeded_uniform") {
                cfg.rollout.initial_conditions = InitialConditions::seeded_uniform;
                cfg.rollout.sample_count = sim.at("count").get<int>();
            } else {
                throw ConfigError("simulate.initial_conditions: expected cell_centers or "
                                  "seeded_uniform");
            }
            cfg.rollout.horizon = sim.value("horizon", 500);
            cfg.rollout.epsilon_radius = sim.value("epsilon_radius", 0.0);
            if (cfg.rollout.horizon < 1) throw ConfigError("simulate.horizon must be >= 1");
            if (cfg.rollout.epsilon_radius < 0.0) {
                throw ConfigError("simulate.epsilon_radius must be >= 0");
            }
        }

        if (j.contains("output")) {
            const json& out = j.at("output");
            cfg.out_dir = out.value("directory", cfg.out_dir);
            cfg.write_trajectories = out.value("write_trajectories", false);
            cfg.export_lp_instance = out.value("export_lp", false);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.rollout.seed = cfg.seed;
    cfg.rollout.store_trajectories = cfg.write_trajectories;
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path));
}

} // namespace lyap
