#include <doctest.h>

#include <cmath>

#include "cf_fixtures.hpp"
#include "helpers.hpp"
#include "windcf/errors.hpp"
#include "windcf/oracle.hpp"

using namespace windcf;

TEST_CASE("grid oracle: a feasible single-point grid returns objective zero") {
    testutil::CfFixture fx = testutil::make_cf_fixture(12345);
    fx.n.trees.clear();
    fx.n.base = fx.x_star[F_TN];
    fx.t.trees.clear();
    fx.t.base = fx.x_star[F_TT];
    fx.classifier.threshold = 1e6;  // everything classifies good
    fx.classifier.epsilon = 0.5;
    // Shrink the boxes to the starting point.
    fx.assets.bounds.lower[F_TN] = fx.assets.bounds.upper[F_TN] = fx.x_star[F_TN];
    fx.assets.bounds.lower[F_TT] = fx.assets.bounds.upper[F_TT] = fx.x_star[F_TT];
    fx.x_star[F_WS] = 2.0;  // p_max = 0 and the historical P is 0
    fx.x_star[F_P] = 0.0;
    ControlLimits limits;
    const GridSearchResult g = brute_force_counterfactual(fx.x_star, fx.models(), fx.assets,
                                                          CfMode::Operator, limits);
    REQUIRE(g.feasible);
    CHECK(g.evaluated == 1);
    CHECK(g.objective == doctest::Approx(0.0));
}

TEST_CASE("grid oracle: results are themselves re-checked against the models") {
    ControlLimits limits;
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const testutil::CfFixture fx = testutil::make_cf_fixture(seed);
        for (CfMode mode : {CfMode::Operator, CfMode::Manufacturer}) {
            const GridSearchResult g =
                brute_force_counterfactual(fx.x_star, fx.models(), fx.assets, mode, limits);
            if (!g.feasible) continue;
            const ValidityReport rep = check_counterfactual(fx.x_star, g.best, fx.models(),
                                                            fx.assets, mode, limits, 1e-6);
            CHECK(rep.ok);
        }
    }
}

TEST_CASE("grid oracle: infeasible grids agree with the solver") {
    testutil::CfFixture fx = testutil::make_cf_fixture(7);
    fx.classifier.epsilon = 1e9;  // no point can clear the margin
    ControlLimits limits;
    const GridSearchResult g = brute_force_counterfactual(fx.x_star, fx.models(), fx.assets,
                                                          CfMode::Operator, limits);
    CHECK(!g.feasible);
    const CounterfactualResult r =
        solve_counterfactual(fx.x_star, fx.models(), fx.assets, CfMode::Operator, limits);
    CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("grid oracle: oversized grids are rejected") {
    const testutil::CfFixture fx = testutil::make_cf_fixture(2);
    ControlLimits limits;
    CHECK_THROWS_AS(brute_force_counterfactual(fx.x_star, fx.models(), fx.assets,
                                               CfMode::Operator, limits, 1, 100),
                    DataError);
    CHECK_THROWS_AS(brute_force_counterfactual(fx.x_star, fx.models(), fx.assets,
                                               CfMode::Operator, limits, 0),
                    DataError);
}

TEST_CASE("solver matches the grid oracle on seeded flagged instances") {
    ControlLimits limits;
    SolveConfig cfg;
    cfg.gap_target = 1e-9;
    int feasible_checked = 0, infeasible_checked = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const testutil::CfFixture fx = testutil::make_cf_fixture(seed);
        if (!fx.flagged) continue;
        const CounterfactualResult mine =
            solve_counterfactual(fx.x_star, fx.models(), fx.assets, CfMode::Operator, limits, cfg);
        const GridSearchResult grid = brute_force_counterfactual(fx.x_star, fx.models(),
                                                                 fx.assets, CfMode::Operator,
                                                                 limits);
        INFO("seed ", seed);
        if (grid.feasible) {
            ++feasible_checked;
            REQUIRE(mine.has_solution);
            // Full-lattice grid: the solver must match it exactly (both sides
            // optimize over the same integral feasible set).
            CHECK(mine.objective <= grid.objective + 1e-6);
            CHECK(std::abs(mine.objective - grid.objective) <=
                  1e-6 * std::max(1.0, grid.objective));
        } else {
            ++infeasible_checked;
            CHECK(!mine.has_solution);
        }
    }
    CHECK(feasible_checked >= 10);
    CHECK(infeasible_checked >= 1);
}

TEST_CASE("enumerate_miqp: no integral variables degenerates to the relaxation") {
    MiqpProblem p;
    const int x = p.add_variable("x", -4.0, 9.0);
    p.add_quadratic_objective_term(x, 1.0, 2.5);
    const EnumerateResult e = enumerate_miqp(p);
    const SolveResult r = solve_relaxation(p);
    CHECK(e.patterns == 1);
    REQUIRE(e.status == SolveStatus::Optimal);
    CHECK(e.objective == doctest::Approx(r.objective).epsilon(1e-9));
}

TEST_CASE("enumerate_miqp: one binary toggling a constraint picks the better branch") {
    MiqpProblem p;
    const int z = p.add_variable("z", 0, 1, VarType::Binary);
    const int x = p.add_variable("x", 0.0, 10.0);
    // x >= 4 - 4 z  (z = 1 switches the floor off)
    LinearConstraint c;
    c.terms = {{x, 1.0}, {z, 4.0}};
    c.sense = ConstraintSense::GreaterEqual;
    c.rhs = 4.0;
    p.add_constraint(c);
    p.add_quadratic_objective_term(x, 1.0, 1.0);  // prefers x = 1
    p.add_linear_objective_term(z, 2.0);          // but z costs 2
    const EnumerateResult e = enumerate_miqp(p);
    REQUIRE(e.status == SolveStatus::Optimal);
    // z=0: x=4 cost 9; z=1: x=1 cost 2. Enumeration must find 2.
    CHECK(e.objective == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(e.patterns == 2);
}

TEST_CASE("enumerate_miqp: pattern caps") {
    MiqpProblem p;
    for (int i = 0; i < 25; ++i) p.add_variable("b" + std::to_string(i), 0, 1, VarType::Binary);
    CHECK_THROWS_AS(enumerate_miqp(p), DataError);  // > 20 binaries

    MiqpProblem q;
    q.add_variable("i0", 0, 1000, VarType::Integer);
    q.add_variable("i1", 0, 1000, VarType::Integer);
    q.add_variable("i2", 0, 1000, VarType::Integer);
    CHECK_THROWS_AS(enumerate_miqp(q, 1000), DataError);  // pattern overflow
}

TEST_CASE("enumerate_miqp cross-validates solve on a seeded suite") {
    SolveConfig cfg;
    cfg.gap_target = 1e-9;
    for (int inst = 0; inst < 40; ++inst) {
        const MiqpProblem p = testutil::random_miqp(91000 + static_cast<std::uint64_t>(inst));
        const EnumerateResult ref = enumerate_miqp(p);
        const SolveResult mine = solve(p, cfg);
        INFO("instance ", inst);
        REQUIRE(mine.status == ref.status);
        if (ref.status == SolveStatus::Optimal) {
            CHECK(std::abs(mine.objective - ref.objective) <=
                  1e-6 * std::max(1.0, std::abs(ref.objective)));
        }
    }
}
