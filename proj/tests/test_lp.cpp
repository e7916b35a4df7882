#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "instance_support.hpp"
#include "lyap/lp.hpp"

using namespace lyap;
using testing_support::Instance;
using testing_support::scalar_instance;
using testing_support::three_cell_instance;

TEST_CASE("assemble_primal: one-variable program") {
    // P1 = [0], gamma = 1.5, m = 1, G = 2  ->  min 2 theta s.t. theta = 1
    const Instance inst = scalar_instance(0.0, 1.5, 1.0, 2.0);
    const LpProblem lp = assemble_primal(inst.spec());
    REQUIRE(lp.a.rows == 1);
    REQUIRE(lp.a.cols == 1);
    CHECK(lp.a.vals == std::vector<double>{1.0});
    CHECK(lp.b == Vec{1.0});
    CHECK(lp.c == Vec{2.0});

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.primal_objective == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("assemble_primal: scalar self-loop arithmetic") {
    // theta (1 - 1.2 * 0.8) = 0.04 theta = 1  ->  theta = 25
    const Instance inst = scalar_instance(0.8, 1.2, 1.0, 2.0);
    const LpProblem lp = assemble_primal(inst.spec());
    REQUIRE(lp.a.vals.size() == 1);
    CHECK(lp.a.vals[0] == doctest::Approx(0.04).epsilon(1e-14));

    const LpSolution sol = solve_stabilization(inst.spec());
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.theta[0][0] == doctest::Approx(25.0).epsilon(1e-8));
    CHECK(sol.primal_objective == doctest::Approx(50.0).epsilon(1e-8));
    CHECK(sol.V[0] == doctest::Approx(50.0).epsilon(1e-8));
}

TEST_CASE("gamma sensitivity: closed form G m / (1 - gamma p)") {
    for (const double gamma : {1.05, 1.1, 1.2}) {
        const Instance inst = scalar_instance(0.5, gamma, 0.7, 1.3);
        const LpSolution sol = solve_stabilization(inst.spec());
        REQUIRE(sol.status == LpStatus::optimal);
        CHECK(sol.primal_objective ==
              doctest::Approx(1.3 * 0.7 / (1.0 - gamma * 0.5)).epsilon(1e-8));
    }
}

TEST_CASE("solve_lp: infeasible certificate for 0 * theta = 1") {
    LpProblem lp;
    lp.name = "zero_row";
    lp.a.rows = 1;
    lp.a.cols = 1;
    lp.a.col_ptr = {0, 0};  // empty column: the constraint is 0 = 1
    lp.b = {1.0};
    lp.c = {1.0};
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::infeasible);
    // Farkas witness: A'y <= 0 with b'y = 1
    REQUIRE(sol.farkas_y.size() == 1);
    CHECK(dot(lp.b, sol.farkas_y) == doctest::Approx(1.0));
}

TEST_CASE("solve_lp: unbounded certificate") {
    // min -x s.t. 0 x = 0, x >= 0: the objective falls without bound
    LpProblem lp;
    lp.name = "free_fall";
    lp.a.rows = 1;
    lp.a.cols = 1;
    lp.a.col_ptr = {0, 0};
    lp.b = {0.0};
    lp.c = {-1.0};
    const LpSolution sol = solve_lp(lp);
    CHECK(sol.status == LpStatus::unbounded);
}

TEST_CASE("random instances: LP optimum matches enumeration") {
    oracle::Rng rng(4242);
    for (int trial = 0; trial < 4; ++trial) {
        const double gamma = trial % 2 == 0 ? 1.05 : 1.2;
        const Instance inst = testing_support::random_instance(rng, gamma);
        const oracle::BruteForceResult bf = oracle::enumerate_policies(
            inst.sub_dense(), inst.cost_dense(), {inst.m.begin(), inst.m.end()}, gamma);
        REQUIRE(bf.any_admissible);
        const LpSolution sol = solve_stabilization(inst.spec());
        REQUIRE(sol.status == LpStatus::optimal);
        CHECK(sol.primal_objective ==
              doctest::Approx(bf.best_cost).epsilon(1e-7));
    }
}

TEST_CASE("solve_lp: iteration limit reports unconverged with residuals") {
    const Instance inst = scalar_instance(0.8, 1.2, 1.0, 2.0);
    LpTolerances tol;
    tol.max_iterations = 1;
    const LpSolution sol = solve_lp(assemble_primal(inst.spec()), tol);
    CHECK(sol.status == LpStatus::unconverged);
    CHECK(sol.rel_gap > 0.0);
    CHECK(!sol.log.empty());
}

TEST_CASE("assemble_dual: V = 0 is always feasible and the scalar bound is tight") {
    const Instance inst = scalar_instance(0.8, 1.2, 1.0, 2.0);
    const LpProblem dual = assemble_dual(inst.spec());
    // V = 0: slacks s = G >= 0 satisfy every row
    REQUIRE(dual.a.rows == 1);
    CHECK(dual.b == Vec{2.0});

    const LpSolution sol = solve_lp(dual);
    REQUIRE(sol.status == LpStatus::optimal);
    const Vec v = dual_variables(inst.spec(), sol.x);
    CHECK(v[0] == doctest::Approx(50.0).epsilon(1e-8));  // G / (1 - gamma p)
    CHECK(dual_objective_value(inst.spec(), sol.x) == doctest::Approx(50.0).epsilon(1e-8));
}

TEST_CASE("three-cell oracle instance: LP matches brute force") {
    const Instance inst = three_cell_instance();
    const oracle::BruteForceResult bf = oracle::enumerate_policies(
        inst.sub_dense(), inst.cost_dense(), {inst.m.begin(), inst.m.end()}, inst.gamma);
    REQUIRE(bf.any_admissible);

    const LpSolution sol = solve_stabilization(inst.spec());
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.primal_objective == doctest::Approx(bf.best_cost).epsilon(1e-8));

    SUBCASE("strong duality") {
        CHECK(std::abs(sol.primal_objective - sol.dual_objective) <=
              1e-8 * (1.0 + std::abs(sol.dual_objective)));
    }
    SUBCASE("independently solved dual agrees") {
        const LpSolution dual_sol = solve_lp(assemble_dual(inst.spec()));
        REQUIRE(dual_sol.status == LpStatus::optimal);
        CHECK(dual_objective_value(inst.spec(), dual_sol.x) ==
              doctest::Approx(sol.primal_objective).epsilon(1e-8));
    }
    SUBCASE("KKT residuals") {
        const KktResiduals k = verify_kkt(inst.spec(), sol);
        CHECK(k.equality <= 1e-8);
        CHECK(k.dual_violation <= 1e-7);
        CHECK(k.complementarity <= 1e-7);
    }
}

TEST_CASE("verify_kkt flags a scaled theta") {
    const Instance inst = scalar_instance(0.8, 1.2, 1.0, 2.0);
    LpSolution sol = solve_stabilization(inst.spec());
    REQUIRE(sol.status == LpStatus::optimal);
    const KktResiduals clean = verify_kkt(inst.spec(), sol);
    CHECK(clean.equality <= 1e-9);

    for (double& v : sol.theta[0]) v *= 1.01;
    const KktResiduals perturbed = verify_kkt(inst.spec(), sol);
    // residual of theta(1 - gamma p) = m scales linearly: 0.01 * ||m||
    CHECK(perturbed.equality == doctest::Approx(0.01 * norm_inf(inst.m)).epsilon(1e-6));
}

TEST_CASE("cost monotonicity: raising G raises the optimum") {
    Instance inst = three_cell_instance();
    const LpSolution base = solve_stabilization(inst.spec());
    REQUIRE(base.status == LpStatus::optimal);
    for (auto& g : inst.cost) {
        for (double& v : g) v += 0.25;
    }
    const LpSolution raised = solve_stabilization(inst.spec());
    REQUIRE(raised.status == LpStatus::optimal);
    CHECK(raised.primal_objective > base.primal_objective + 1e-6);
}

TEST_CASE("feasibility_phase") {
    SUBCASE("fully stabilizable: nothing masked") {
        const Instance inst = three_cell_instance();
        const FeasibilityPhaseReport rep = feasibility_phase(inst.spec());
        CHECK(rep.masked_cells.empty());
        CHECK(rep.objective <= 1e-7);
        CHECK(rep.anything_stabilizable);
    }
    SUBCASE("isolated cell is masked and the masked LP is feasible") {
        // cell 0 self-loops under both actions; cells 1, 2 drain to the attractor
        const oracle::Mat a1 = {{1.0, 0.0, 0.0, 0.0},
                                {0.0, 0.3, 0.2, 0.5},
                                {0.0, 0.1, 0.1, 0.8},
                                {0.0, 0.0, 0.0, 1.0}};
        const oracle::Mat a2 = {{1.0, 0.0, 0.0, 0.0},
                                {0.0, 0.5, 0.1, 0.4},
                                {0.0, 0.2, 0.2, 0.6},
                                {0.0, 0.0, 0.0, 1.0}};
        Instance inst;
        inst.family = testing_support::family_from_dense({a1, a2});
        inst.gamma = 1.1;
        inst.m = {1.0, 1.0, 1.0};
        inst.cost = {{1.0, 1.0, 1.0}, {0.5, 2.0, 0.5}};

        // the unmasked LP cannot carry cell 0's mass
        const LpSolution unmasked = solve_stabilization(inst.spec());
        CHECK(unmasked.status == LpStatus::infeasible);

        const FeasibilityPhaseReport rep = feasibility_phase(inst.spec());
        CHECK(rep.masked_cells == std::vector<int>{0});
        // the residual on the isolated cell is its own m entry
        CHECK(rep.residuals[0] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(rep.anything_stabilizable);

        const StabilizationLp masked = rep.masked_spec;
        const LpSolution sol = solve_stabilization(masked);
        REQUIRE(sol.status == LpStatus::optimal);
    }
    SUBCASE("all cells isolated: nothing stabilizable") {
        const oracle::Mat a1 = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
        Instance inst;
        inst.family = testing_support::family_from_dense({a1});
        inst.gamma = 1.1;
        inst.m = {1.0, 1.0};
        inst.cost = {{1.0, 1.0}};
        const FeasibilityPhaseReport rep = feasibility_phase(inst.spec());
        CHECK(rep.masked_cells.size() == 2);
        CHECK_FALSE(rep.anything_stabilizable);
    }
}

TEST_CASE("lp text interchange round-trips") {
    const Instance inst = three_cell_instance();
    const LpProblem lp = assemble_primal(inst.spec());
    const LpProblem back = import_lp(export_lp(lp));
    CHECK(back.a.rows == lp.a.rows);
    CHECK(back.a.cols == lp.a.cols);
    CHECK(back.a.col_ptr == lp.a.col_ptr);
    CHECK(back.a.row_idx == lp.a.row_idx);
    CHECK(back.a.vals == lp.a.vals);
    CHECK(back.b == lp.b);
    CHECK(back.c == lp.c);
}

TEST_CASE("StabilizationLp validation") {
    Instance inst = scalar_instance(0.5, 1.2, 1.0, 1.0);
    SUBCASE("gamma must exceed 1") {
        inst.gamma = 1.0;
        CHECK_THROWS_AS(inst.spec().validate(), std::invalid_argument);
    }
    SUBCASE("negative cost rejected") {
        inst.cost[0][0] = -0.5;
        CHECK_THROWS_AS(inst.spec().validate(), std::invalid_argument);
    }
    SUBCASE("m length checked") {
        inst.m.push_back(1.0);
        CHECK_THROWS_AS(inst.spec().validate(), std::invalid_argument);
    }
}
