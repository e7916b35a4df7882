#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "instance_support.hpp"
#include "lyap/synthesis.hpp"

using namespace lyap;
using testing_support::Instance;
using testing_support::scalar_instance;
using testing_support::three_cell_instance;

namespace {

// N = 4 chain: 0 -> 1 -> 2 -> attractor; the closed loop is nilpotent.
Instance chain_instance(double gamma = 1.2) {
    Instance inst;
    inst.family = testing_support::family_from_dense({{{0.0, 1.0, 0.0, 0.0},
                                                       {0.0, 0.0, 1.0, 0.0},
                                                       {0.0, 0.0, 0.0, 1.0},
                                                       {0.0, 0.0, 0.0, 1.0}}});
    inst.gamma = gamma;
    inst.m = {1.0, 1.0, 1.0};
    inst.cost = {{1.0, 2.0, 3.0}};
    return inst;
}

LpSolution fake_optimal(std::vector<Vec> theta) {
    LpSolution sol;
    sol.status = LpStatus::optimal;
    sol.theta = std::move(theta);
    return sol;
}

} // namespace

TEST_CASE("extract_policy: single action everywhere") {
    const Instance inst = chain_instance();
    const ControlPolicy pol =
        extract_policy(inst.spec(), fake_optimal({{0.5, 0.5, 0.5}}));
    CHECK(pol.action_of == std::vector<int>{0, 0, 0});
    CHECK(pol.closed_loop_sub == inst.family.sub[0]);
    CHECK(pol.closed_loop_cost == Vec{1.0, 2.0, 3.0});
}

TEST_CASE("extract_policy: min-index over the support") {
    const Instance inst = three_cell_instance();
    SUBCASE("zero first action: pick the second") {
        const ControlPolicy pol =
            extract_policy(inst.spec(), fake_optimal({{0.0, 0.5}, {0.4, 0.0}}));
        CHECK(pol.action_of == std::vector<int>{1, 0});
    }
    SUBCASE("degenerate support: smallest index wins") {
        const ControlPolicy pol =
            extract_policy(inst.spec(), fake_optimal({{0.2, 0.5}, {0.3, 0.0}}));
        CHECK(pol.action_of == std::vector<int>{0, 0});
    }
    SUBCASE("no supported action names the cell") {
        CHECK_THROWS_WITH_AS(
            extract_policy(inst.spec(), fake_optimal({{0.0, 0.5}, {0.0, 0.0}})),
            doctest::Contains("cell 1"), std::runtime_error);
    }
}

TEST_CASE("theta_tilde") {
    SUBCASE("scalar: m / (1 - gamma p) concentrated on one action") {
        const Instance inst = scalar_instance(0.8, 1.2, 1.0, 2.0);
        const LpSolution sol = solve_stabilization(inst.spec());
        REQUIRE(sol.status == LpStatus::optimal);
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const ThetaTilde tt = theta_tilde(inst.spec(), pol);
        CHECK(tt.theta[0][0] == doctest::Approx(25.0).epsilon(1e-10));
        CHECK(tt.objective == doctest::Approx(50.0).epsilon(1e-10));
    }
    SUBCASE("nilpotent chain: finite Neumann series") {
        const Instance inst = chain_instance();
        const ControlPolicy pol =
            extract_policy(inst.spec(), fake_optimal({{1.0, 1.0, 1.0}}));
        const ThetaTilde tt = theta_tilde(inst.spec(), pol);
        // mu = sum_k (gamma P')^k m: mu_0 = 1, mu_1 = 1 + gamma, mu_2 = 1 + gamma + gamma^2
        const double g = inst.gamma;
        CHECK(tt.theta[0][0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(tt.theta[0][1] == doctest::Approx(1.0 + g).epsilon(1e-12));
        CHECK(tt.theta[0][2] == doctest::Approx(1.0 + g + g * g).epsilon(1e-12));
    }
    SUBCASE("oracle instance: theta-tilde objective equals the LP objective") {
        const Instance inst = three_cell_instance();
        const LpSolution sol = solve_stabilization(inst.spec());
        REQUIRE(sol.status == LpStatus::optimal);
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const ThetaTilde tt = theta_tilde(inst.spec(), pol);
        CHECK(tt.objective == doctest::Approx(sol.primal_objective).epsilon(1e-8));
        CHECK(tt.objective == doctest::Approx(dot(inst.m, sol.V)).epsilon(1e-8));
    }
}

TEST_CASE("lyapunov_measure") {
    SUBCASE("P1 = 0: everything absorbed in one step, mu = m") {
        const Instance inst = scalar_instance(0.0, 1.5, 0.7, 1.0);
        const LpSolution sol = solve_stabilization(inst.spec());
        REQUIRE(sol.status == LpStatus::optimal);
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const LyapunovMeasure lm = lyapunov_measure(inst.spec(), pol);
        CHECK(lm.mu[0] == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(lm.residual <= 1e-12);
    }
    SUBCASE("scalar self-loop: mu = m / (1 - gamma p)") {
        const Instance inst = scalar_instance(0.8, 1.2, 1.0, 2.0);
        const LpSolution sol = solve_stabilization(inst.spec());
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const LyapunovMeasure lm = lyapunov_measure(inst.spec(), pol);
        CHECK(lm.mu[0] == doctest::Approx(25.0).epsilon(1e-10));
    }
    SUBCASE("measure equation residual and positivity on the oracle instance") {
        const Instance inst = three_cell_instance();
        const LpSolution sol = solve_stabilization(inst.spec());
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const LyapunovMeasure lm = lyapunov_measure(inst.spec(), pol);
        CHECK(lm.residual <= 1e-8);
        for (std::size_t j = 0; j < lm.mu.size(); ++j) {
            CHECK(lm.mu[j] > 0.0);  // m > 0 everywhere here
        }
        // direct residual of gamma (P1_u)' mu - mu = -m
        Vec tmp(lm.mu.size());
        csr_matvec_transpose(pol.closed_loop_sub, lm.mu, tmp);
        for (std::size_t j = 0; j < lm.mu.size(); ++j) {
            CHECK(std::abs(inst.gamma * tmp[j] - lm.mu[j] + inst.m[j]) <= 1e-8);
        }
    }
}

TEST_CASE("certify") {
    SUBCASE("nilpotent chain: rho estimate is zero") {
        const Instance inst = chain_instance();
        const LpSolution sol = solve_stabilization(inst.spec());
        REQUIRE(sol.status == LpStatus::optimal);
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const StabilityCertificate cert = certify(inst.spec(), pol, sol);
        CHECK(cert.spectral_radius_estimate <= 1e-10);
        CHECK(cert.valid);
    }
    SUBCASE("scalar p = 0.8, gamma = 1.2: margin 1/1.2 - 0.8") {
        const Instance inst = scalar_instance(0.8, 1.2, 1.0, 2.0);
        const LpSolution sol = solve_stabilization(inst.spec());
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const StabilityCertificate cert = certify(inst.spec(), pol, sol);
        CHECK(cert.spectral_radius_estimate == doctest::Approx(0.8).epsilon(1e-9));
        CHECK(cert.margin == doctest::Approx(1.0 / 1.2 - 0.8).epsilon(1e-8));
        CHECK(cert.valid);
    }
    SUBCASE("identity closed loop: negative margin invalidates") {
        Instance inst = scalar_instance(1.0, 1.1, 1.0, 1.0);  // self-loop, never leaves
        LpSolution fake = fake_optimal({{1.0}});
        fake.V = {0.0};
        const ControlPolicy pol = extract_policy(inst.spec(), fake);
        const StabilityCertificate cert = certify(inst.spec(), pol, fake);
        CHECK(cert.spectral_radius_estimate == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(cert.margin < 0.0);
        CHECK_FALSE(cert.valid);
    }
}

TEST_CASE("value_consistency") {
    SUBCASE("scalar: V = G / (1 - gamma p) satisfies both forms") {
        const Instance inst = scalar_instance(0.8, 1.2, 1.0, 2.0);
        const LpSolution sol = solve_stabilization(inst.spec());
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const ValueConsistencyReport rep = value_consistency(inst.spec(), pol, sol.V);
        CHECK(rep.fixed_point_residual <= 1e-7);
        CHECK(rep.neumann_residual <= 1e-6 * (1.0 + norm_inf(sol.V)));
        CHECK(rep.within_tol);
    }
    SUBCASE("nilpotent chain: the finite series is exact") {
        const Instance inst = chain_instance();
        const ControlPolicy pol =
            extract_policy(inst.spec(), fake_optimal({{1.0, 1.0, 1.0}}));
        // V = G + gamma P (G + gamma P G): backwards accumulation by hand
        const double g = inst.gamma;
        Vec v(3);
        v[2] = 3.0;
        v[1] = 2.0 + g * v[2];
        v[0] = 1.0 + g * v[1];
        const ValueConsistencyReport rep = value_consistency(inst.spec(), pol, v);
        CHECK(rep.fixed_point_residual <= 1e-12);
        CHECK(rep.neumann_residual <= 1e-12);
        CHECK(rep.neumann_terms <= 4);
    }
    SUBCASE("oracle instance residual") {
        const Instance inst = three_cell_instance();
        const LpSolution sol = solve_stabilization(inst.spec());
        const ControlPolicy pol = extract_policy(inst.spec(), sol);
        const ValueConsistencyReport rep = value_consistency(inst.spec(), pol, sol.V);
        CHECK(rep.fixed_point_residual <= 1e-7);
    }
}

TEST_CASE("objective equality chain: primal, theta-tilde, m'V") {
    const Instance inst = three_cell_instance();
    const LpSolution sol = solve_stabilization(inst.spec());
    REQUIRE(sol.status == LpStatus::optimal);
    const ControlPolicy pol = extract_policy(inst.spec(), sol);
    const ThetaTilde tt = theta_tilde(inst.spec(), pol);
    const double mv = dot(inst.m, sol.V);
    const double scale = 1.0 + std::abs(mv);
    CHECK(std::abs(sol.primal_objective - tt.objective) <= 1e-6 * scale);
    CHECK(std::abs(tt.objective - mv) <= 1e-6 * scale);
}

TEST_CASE("policy invariance under cost scaling") {
    Instance inst = three_cell_instance();
    const LpSolution base = solve_stabilization(inst.spec());
    REQUIRE(base.status == LpStatus::optimal);
    const ControlPolicy base_pol = extract_policy(inst.spec(), base);

    for (auto& g : inst.cost) {
        for (double& v : g) v *= 3.5;
    }
    const LpSolution scaled = solve_stabilization(inst.spec());
    REQUIRE(scaled.status == LpStatus::optimal);
    const ControlPolicy scaled_pol = extract_policy(inst.spec(), scaled);
    CHECK(scaled_pol.action_of == base_pol.action_of);
    CHECK(scaled.primal_objective == doctest::Approx(3.5 * base.primal_objective).epsilon(1e-7));
}

TEST_CASE("policy csv carries centers, controls, V and mu") {
    const SystemDef sys = standard_map({0.25});
    const StateBox box{{0.0, 0.0}, {1.0, 1.0}, {true, true}};
    const Partition part = build_partition(box, {4, 4}, {{0.25, 0.5}});
    const ControlGrid grid{{Vec{0.0}, Vec{0.5}}};
    const TransitionFamily fam =
        build_transition_family(sys, part, grid, 4, SamplingMode::stratified_grid, 0);
    StabilizationLp spec;
    spec.gamma = 1.05;
    spec.m = lebesgue_vector(part);
    spec.cost.assign(2, Vec(std::size_t(part.n_cells()) - 1, 1.0));
    spec.family = &fam;
    const LpSolution sol = solve_stabilization(spec);
    if (sol.status == LpStatus::optimal) {
        const ControlPolicy pol = extract_policy(spec, sol);
        const LyapunovMeasure lm = lyapunov_measure(spec, pol);
        const std::string csv = policy_csv(spec, pol, sol.V, lm.mu, &part, &grid);
        CHECK(csv.rfind("cell,center_x0,center_x1,action,u0,V,mu\n", 0) == 0);
        // one line per non-attractor cell plus the header
        std::size_t lines = 0;
        for (char ch : csv) {
            if (ch == '\n') ++lines;
        }
        CHECK(lines == std::size_t(part.n_cells()));
    }
}
