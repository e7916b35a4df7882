#include <doctest.h>

#include <stdexcept>

#include "lyap/systems.hpp"

using namespace lyap;

TEST_CASE("standard map: direct substitution") {
    const SystemDef sys = standard_map({0.25});

    SUBCASE("u = 0 is a pure shift") {
        const Vec y = evaluate(sys, {0.25, 0.5}, {0.0});
        CHECK(y[0] == 0.75);
        CHECK(y[1] == 0.5);
    }
    SUBCASE("kick at sin(pi/2)") {
        const Vec y = evaluate(sys, {0.25, 0.5}, {1.0});
        CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(y[1] == doctest::Approx(0.75).epsilon(1e-14));
    }
    SUBCASE("kick at sin(3pi/2)") {
        const Vec y = evaluate(sys, {0.75, 0.5}, {1.0});
        CHECK(y[0] == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(y[1] == doctest::Approx(0.25).epsilon(1e-14));
    }
}

TEST_CASE("standard map: uncontrolled dynamics preserve y = const lines") {
    const SystemDef sys = standard_map({0.25});
    std::uint64_t s = 12345;
    for (int t = 0; t < 200; ++t) {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        const double x = double(s >> 11) * 0x1.0p-53;
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        const double y = double(s >> 11) * 0x1.0p-53;
        const Vec out = evaluate(sys, {x, y}, {0.0});
        CHECK(out[1] == y);
    }
}

TEST_CASE("standard map: period-two orbit under u = 0") {
    const SystemDef sys = standard_map({0.25});
    const Vec a{0.25, 0.5}, b{0.75, 0.5};
    CHECK(evaluate(sys, a, {0.0}) == b);
    CHECK(evaluate(sys, b, {0.0}) == a);
}

TEST_CASE("evaluate: identity, folding and domain errors") {
    SUBCASE("identity") {
        const SystemDef sys = identity_system({{0.0}, {1.0}, {false}});
        CHECK(evaluate(sys, {0.3}, {0.0})[0] == 0.3);
    }
    SUBCASE("shift folds mod 1") {
        const SystemDef sys = shift_system({{0.0}, {1.0}, {true}});
        CHECK(evaluate(sys, {0.9}, {0.2})[0] == doctest::Approx(0.1).epsilon(1e-14));
    }
    SUBCASE("out-of-box on a non-wrapped dimension") {
        const SystemDef sys = identity_system({{0.0}, {1.0}, {false}});
        CHECK_THROWS_AS(evaluate(sys, {1.5}, {0.0}), std::domain_error);
        CHECK_THROWS_AS(evaluate(sys, {1.0}, {0.0}), std::domain_error);
    }
    SUBCASE("control dimension mismatch") {
        const SystemDef sys = identity_system({{0.0}, {1.0}, {false}});
        CHECK_THROWS_AS(evaluate(sys, {0.3}, {0.0, 0.0}), std::invalid_argument);
    }
}

TEST_CASE("evaluate is pure: repeated calls bit-identical") {
    const SystemDef sys = standard_map({0.25});
    const Vec x{0.123456789, 0.987654321};
    const Vec u{0.35};
    const Vec first = evaluate(sys, x, u);
    for (int i = 0; i < 5; ++i) CHECK(evaluate(sys, x, u) == first);
}

TEST_CASE("fold: value exactly at the upper edge goes to the lower edge") {
    const StateBox box{{0.0}, {1.0}, {true}};
    CHECK(box.fold({1.0})[0] == 0.0);
    CHECK(box.fold({2.0})[0] == 0.0);
    CHECK(box.fold({-0.25})[0] == 0.75);
}

TEST_CASE("explicit_matrix_system validation") {
    SUBCASE("2x2 identity is a valid handle") {
        const ExplicitSystem sys = explicit_matrix_system({CsrMatrix::identity(2)});
        CHECK(sys.n_cells == 2);
        CHECK(sys.matrices.size() == 1);
    }
    SUBCASE("row sum 0.9 is rejected naming row and sum") {
        const CsrMatrix bad = CsrMatrix::from_rows(2, {{{0, 0.9}}, {{1, 1.0}}});
        CHECK_THROWS_WITH_AS(explicit_matrix_system({bad}),
                             doctest::Contains("row 1"), std::invalid_argument);
    }
    SUBCASE("negative entries are rejected") {
        const CsrMatrix bad = CsrMatrix::from_rows(2, {{{0, 1.5}, {1, -0.5}}, {{1, 1.0}}});
        CHECK_THROWS_AS(explicit_matrix_system({bad}), std::invalid_argument);
    }
    SUBCASE("non-square matrix is rejected") {
        CsrMatrix bad = CsrMatrix::from_rows(3, {{{0, 1.0}}, {{1, 1.0}}});
        CHECK_THROWS_AS(explicit_matrix_system({bad}), std::invalid_argument);
    }
}
