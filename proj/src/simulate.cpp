#include "lyap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lyap/text_io.hpp"

namespace lyap {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit_from(std::uint64_t& state) {
    state = mix64(state);
    return double(state >> 11) * 0x1.0p-53;
}

// Sup-norm distance from x to an attractor cell's box, respecting wrap.
double supdist_to_cell(const StateBox& box, const Vec& lo, const Vec& width, const Vec& x) {
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double hi = lo[k] + width[k];
        auto interval_dist = [&](double v) {
            if (v < lo[k]) return lo[k] - v;
            if (v > hi) return v - hi;
            return 0.0;
        };
        double dk = interval_dist(x[k]);
        if (box.wrap[k] && dk > 0.0) {
            const double span = box.upper[k] - box.lower[k];
            dk = std::min({dk, interval_dist(x[k] - span), interval_dist(x[k] + span)});
        }
        d = std::max(d, dk);
    }
    return d;
}

} // namespace

RolloutResult rollout(const SystemDef& system, const Partition& partition,
                      const std::vector<int>& action_of, const ControlGrid& grid,
                      const RolloutConfig& config, Exec exec) {
    if (config.horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
    if (config.epsilon_radius < 0.0) {
        throw std::invalid_argument("rollout: epsilon_radius must be >= 0");
    }
    const int n_sub = partition.n_cells() - 1;
    if (int(action_of.size()) != n_sub) {
        throw std::invalid_argument("rollout: action table size mismatch");
    }

    // Attractor-cell geometry for the dilated membership test.
    std::vector<Vec> attractor_lowers;
    const Vec width = partition.cell_width();
    if (config.epsilon_radius > 0.0) {
        for (std::int64_t raw : partition.attractor_raw_cells()) {
            Vec lo(partition.dimension());
            std::int64_t r = raw;
            for (int d = partition.dimension() - 1; d >= 0; --d) {
                const std::int64_t idx = r % partition.cells_per_dim()[d];
                r /= partition.cells_per_dim()[d];
                lo[d] = partition.box().lower[d] +
                        double(idx) * (partition.box().upper[d] - partition.box().lower[d]) /
                            partition.cells_per_dim()[d];
            }
            attractor_lowers.push_back(std::move(lo));
        }
    }
    auto in_target = [&](const Vec& x, int cell) {
        if (cell == partition.macro_cell()) return true;
        if (config.epsilon_radius <= 0.0) return false;
        for (const Vec& lo : attractor_lowers) {
            if (supdist_to_cell(partition.box(), lo, width, x) <= config.epsilon_radius) {
                return true;
            }
        }
        return false;
    };

    // Initial states.
    std::vector<Vec> starts;
    if (config.initial_conditions == InitialConditions::cell_centers) {
        starts.reserve(n_sub);
        for (int j = 0; j < n_sub; ++j) starts.push_back(partition.cell_center(j));
    } else {
        if (config.sample_count < 1) {
            throw std::invalid_argument("rollout: seeded_uniform needs sample_count >= 1");
        }
        starts.reserve(config.sample_count);
        const StateBox& box = partition.box();
        for (int t = 0; t < config.sample_count; ++t) {
            std::uint64_t state = mix64(config.seed ^ (0xabcd1234ULL + std::uint64_t(t)));
            Vec x(partition.dimension());
            for (int d = 0; d < partition.dimension(); ++d) {
                x[d] = box.lower[d] + unit_from(state) * (box.upper[d] - box.lower[d]);
            }
            starts.push_back(std::move(x));
        }
    }
    const std::int64_t total = std::int64_t(starts.size());

    RolloutResult result;
    result.report.total_trajectories = total;
    result.report.survival_counts.assign(config.horizon, 0);
    if (config.store_trajectories) result.trajectories.resize(starts.size());

    // Per-trajectory simulation; outputs are integers merged in fixed order.
    std::vector<TrajectoryOutcome> outcomes(starts.size());
    std::vector<int> absorb_step(starts.size(), -1);  // step index when absorbed

    auto run_one = [&](int t) {
        Vec x = partition.box().fold(starts[std::size_t(t)]);
        TrajectoryRecord rec;
        rec.id = t;
        int cell = partition.cell_of(x);
        if (config.store_trajectories) {
            rec.states.push_back(x);
            rec.cells.push_back(cell);
        }
        if (in_target(x, cell)) {
            outcomes[std::size_t(t)] = TrajectoryOutcome::absorbed;
            absorb_step[std::size_t(t)] = 0;
            if (config.store_trajectories) result.trajectories[std::size_t(t)] = std::move(rec);
            return;
        }
        for (int n = 1; n <= config.horizon; ++n) {
            const int a = action_of[cell];
            if (a < 0) {
                outcomes[std::size_t(t)] = TrajectoryOutcome::lost;
                absorb_step[std::size_t(t)] = -n;  // negative marks the loss step
                rec.steps = n - 1;
                if (config.store_trajectories) {
                    result.trajectories[std::size_t(t)] = std::move(rec);
                }
                return;
            }
            if (config.store_trajectories) rec.actions.push_back(a);
            x = evaluate(system, x, grid.values[a]);
            cell = partition.cell_of(x);
            if (config.store_trajectories) {
                rec.states.push_back(x);
                rec.cells.push_back(cell);
            }
            if (in_target(x, cell)) {
                outcomes[std::size_t(t)] = TrajectoryOutcome::absorbed;
                absorb_step[std::size_t(t)] = n;
                rec.steps = n;
                if (config.store_trajectories) {
                    result.trajectories[std::size_t(t)] = std::move(rec);
                }
                return;
            }
        }
        outcomes[std::size_t(t)] = TrajectoryOutcome::surviving;
        absorb_step[std::size_t(t)] = config.horizon + 1;
        rec.steps = config.horizon;
        if (config.store_trajectories) result.trajectories[std::size_t(t)] = std::move(rec);
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 32)
        for (int t = 0; t < int(starts.size()); ++t) run_one(t);
    } else {
        for (int t = 0; t < int(starts.size()); ++t) run_one(t);
    }

    std::int64_t absorbed = 0;
    for (std::size_t t = 0; t < starts.size(); ++t) {
        switch (outcomes[t]) {
            case TrajectoryOutcome::absorbed: {
                ++absorbed;
                // survives steps 1 .. absorb_step-1
                for (int n = 1; n < absorb_step[t]; ++n) {
                    result.report.survival_counts[std::size_t(n) - 1]++;
                }
                break;
            }
            case TrajectoryOutcome::surviving: {
                for (int n = 1; n <= config.horizon; ++n) {
                    result.report.survival_counts[std::size_t(n) - 1]++;
                }
                break;
            }
            case TrajectoryOutcome::lost:
                // excluded from the decay fit entirely
                ++result.report.lost_trajectories;
                break;
        }
    }
    result.report.fraction_stabilized = total > 0 ? double(absorbed) / double(total) : 0.0;
    fit_geometric_decay(result.report);
    return result;
}

void fit_geometric_decay(DecayReport& report) {
    // log c_n = log M + n log beta over the strictly positive counts.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n_pts = 0;
    for (std::size_t i = 0; i < report.survival_counts.size(); ++i) {
        const std::int64_t c = report.survival_counts[i];
        if (c <= 0) break;
        const double x = double(i + 1);
        const double y = std::log(double(c));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n_pts;
    }
    if (n_pts < 2) {
        report.fitted_beta = 0.0;
        report.fitted_m = n_pts == 1 ? double(report.survival_counts[0]) : 0.0;
        return;
    }
    const double denom = n_pts * sxx - sx * sx;
    const double slope = (n_pts * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / n_pts;
    report.fitted_beta = std::exp(slope);
    report.fitted_m = std::exp(intercept);
}

std::string decay_csv(const DecayReport& report) {
    std::ostringstream out;
    out << "step,survivors\n";
    for (std::size_t i = 0; i < report.survival_counts.size(); ++i) {
        out << i + 1 << ',' << report.survival_counts[i] << '\n';
    }
    return out.str();
}

std::string decay_summary(const DecayReport& report) {
    std::ostringstream out;
    out << "total_trajectories " << report.total_trajectories << '\n';
    out << "lost_trajectories " << report.lost_trajectories << '\n';
    out << "fraction_stabilized " << fmt_double(report.fraction_stabilized) << '\n';
    out << "fitted_beta " << fmt_double(report.fitted_beta) << '\n';
    out << "fitted_M " << fmt_double(report.fitted_m) << '\n';
    return out.str();
}

std::string trajectories_csv(const std::vector<TrajectoryRecord>& trajectories) {
    std::ostringstream out;
    out << "traj_id,step,";
    // column count is data-dependent; emit x coordinates then cell/action
    if (!trajectories.empty() && !trajectories.front().states.empty()) {
        for (std::size_t d = 0; d < trajectories.front().states.front().size(); ++d) {
            out << 'x' << d << ',';
        }
    }
    out << "cell,action\n";
    for (const TrajectoryRecord& rec : trajectories) {
        for (std::size_t n = 0; n < rec.states.size(); ++n) {
            out << rec.id + 1 << ',' << n;
            for (double x : rec.states[n]) out << ',' << fmt_double(x);
            out << ',' << rec.cells[n] + 1 << ','
                << (n < rec.actions.size() ? std::to_string(rec.actions[n] + 1) : "-") << '\n';
        }
    }
    return out.str();
}

} // namespace lyap
