#include <doctest.h>

#include <stdexcept>

#include "lyap/partition.hpp"

using namespace lyap;

TEST_CASE("cell_of on [0,1) with 4 cells") {
    const StateBox box{{0.0}, {1.0}, {false}};
    const Partition part = build_partition(box, {4}, {Vec{0.9}});
    // half-open cells: left edges belong to their own cell
    CHECK(part.cell_of({0.0}) == 0);
    CHECK(part.cell_of({0.25}) == 1);
    CHECK(part.cell_of({0.74}) == 2);
    // the attractor point's cell is the macro-cell
    CHECK(part.cell_of({0.9}) == part.macro_cell());
    CHECK(part.n_cells() == 4);
}

TEST_CASE("build_partition: standard-map geometry lumps two attractor cells") {
    const StateBox box{{0.0, 0.0}, {1.0, 1.0}, {true, true}};
    const Partition part = build_partition(box, {50, 50}, {{0.25, 0.5}, {0.75, 0.5}});
    CHECK(part.n_cells() == 2499);
    CHECK(part.attractor_cell_count() == 2);
    CHECK(part.cell_of({0.25, 0.5}) == part.macro_cell());
    CHECK(part.cell_of({0.75, 0.5}) == part.macro_cell());
}

TEST_CASE("build_partition: degenerate lumping when points share a cell") {
    const StateBox box{{0.0}, {1.0}, {false}};
    const Partition part = build_partition(box, {4}, {Vec{0.9}, Vec{0.95}});
    CHECK(part.attractor_cell_count() == 1);
    CHECK(part.n_cells() == 4);
}

TEST_CASE("build_partition: attractor point on an excluded boundary") {
    const StateBox box{{0.0}, {1.0}, {false}};
    CHECK_THROWS_AS(build_partition(box, {4}, {Vec{1.0}}), std::domain_error);
}

TEST_CASE("every folded point maps to exactly one cell") {
    const StateBox box{{0.0, -1.0}, {1.0, 3.0}, {true, false}};
    const Partition part = build_partition(box, {7, 5}, {{0.5, 0.0}});
    std::uint64_t s = 99;
    for (int t = 0; t < 500; ++t) {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        const double x = double(s >> 11) * 0x1.0p-53 * 3.0 - 1.0;  // may need folding in dim 0
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        const double y = -1.0 + double(s >> 11) * 0x1.0p-53 * 3.999;
        const int c = part.cell_of({x, y});
        CHECK(c >= 0);
        CHECK(c < part.n_cells());
        CHECK(part.cell_of({x, y}) == c);
    }
}

TEST_CASE("lebesgue_vector: uniform volumes") {
    SUBCASE("1-D quarters") {
        const StateBox box{{0.0}, {1.0}, {false}};
        const Partition part = build_partition(box, {4}, {Vec{0.9}});
        const Vec m = lebesgue_vector(part);
        REQUIRE(m.size() == 3);
        for (double v : m) CHECK(v == 0.25);
    }
    SUBCASE("50x50 standard-map partition") {
        const StateBox box{{0.0, 0.0}, {1.0, 1.0}, {true, true}};
        const Partition part = build_partition(box, {50, 50}, {{0.25, 0.5}, {0.75, 0.5}});
        const Vec m = lebesgue_vector(part);
        REQUIRE(m.size() == 2498);
        for (double v : m) CHECK(v == doctest::Approx(1.0 / 2500).epsilon(1e-15));
    }
}

TEST_CASE("cell centers sit inside their cells") {
    const StateBox box{{0.0, 0.0}, {1.0, 1.0}, {true, true}};
    const Partition part = build_partition(box, {9, 11}, {{0.5, 0.5}});
    for (int j = 0; j < part.n_cells() - 1; ++j) {
        CHECK(part.cell_of(part.cell_center(j)) == j);
    }
}

TEST_CASE("control grid range notation") {
    SUBCASE("the bundled 21-action grid") {
        const ControlGrid grid = control_grid_from_range(-0.5, 0.05, 0.5);
        REQUIRE(grid.size() == 21);
        CHECK(grid.values.front()[0] == -0.5);
        CHECK(grid.values[10][0] == 0.0);
        CHECK(grid.values.back()[0] == 0.5);
    }
    SUBCASE("uneven step keeps the raw progression") {
        const ControlGrid grid = control_grid_from_range(0.0, 0.3, 1.0);
        REQUIRE(grid.size() == 4);
        CHECK(grid.values.back()[0] == doctest::Approx(0.9));
    }
    SUBCASE("duplicate control values rejected") {
        ControlGrid grid;
        grid.values = {Vec{0.5}, Vec{0.5}};
        CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
    }
}
