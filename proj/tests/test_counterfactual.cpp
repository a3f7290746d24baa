#include <doctest.h>

#include <cmath>

#include "cf_fixtures.hpp"
#include "windcf/counterfactual.hpp"
#include "windcf/errors.hpp"

using namespace windcf;

namespace {

// A fixture whose starting point is already on the good side of the margin
// and consistent with constant surrogates: the distance-zero case.
testutil::CfFixture feasible_start_fixture() {
    testutil::CfFixture fx = testutil::make_cf_fixture(12345);
    // Constant surrogates equal to the starting temperatures.
    fx.n.trees.clear();
    fx.n.base = fx.x_star[F_TN];
    fx.t.trees.clear();
    fx.t.base = fx.x_star[F_TT];
    // Classifier threshold far above every score: everything is class 0.
    fx.classifier.threshold = 1e6;
    fx.classifier.epsilon = 0.5;
    fx.flagged = false;
    return fx;
}

}  // namespace

TEST_CASE("operator problem: a feasible starting point is its own counterfactual") {
    const testutil::CfFixture fx = feasible_start_fixture();
    ControlLimits limits;
    const CounterfactualResult r =
        solve_counterfactual(fx.x_star, fx.models(), fx.assets, CfMode::Operator, limits);
    REQUIRE(r.has_solution);
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(0.0).epsilon(1e-12));
    for (int f : {F_P, F_TN, F_TT}) CHECK(r.counterfactual[f] == fx.x_star[f]);
    CHECK(r.valid);
}

TEST_CASE("operator problem: wind below cut-in forces zero power") {
    testutil::CfFixture fx = feasible_start_fixture();
    fx.x_star[F_WS] = 2.0;  // below the 3 m/s cut-in
    fx.x_star[F_P] = 0.0;
    ControlLimits limits;
    const CounterfactualProblem built =
        build_operator_problem(fx.x_star, fx.models(), fx.assets, limits);
    REQUIRE(!built.trivially_infeasible);
    CHECK(built.p_max_value == 0.0);
    CHECK(built.problem.variables()[static_cast<size_t>(built.x_p)].upper == 0.0);
    const CounterfactualResult r =
        solve_counterfactual(fx.x_star, fx.models(), fx.assets, CfMode::Operator, limits);
    REQUIRE(r.has_solution);
    CHECK(r.counterfactual[F_P] == 0.0);
}

TEST_CASE("operator problem: missing classifier is an error") {
    const testutil::CfFixture fx = testutil::make_cf_fixture(5);
    CfModels broken = fx.models();
    broken.classifier = nullptr;
    ControlLimits limits;
    CHECK_THROWS_AS(build_operator_problem(fx.x_star, broken, fx.assets, limits), DataError);
}

TEST_CASE("control limits and revenue config validate their ranges") {
    ControlLimits bad;
    bad.max_tt_change = 0.0;
    CHECK_THROWS_AS(bad.validate(), DataError);
    ControlLimits bad2;
    bad2.beta = 1.0;
    CHECK_THROWS_AS(bad2.validate(), DataError);
    RevenueConfig rc;
    rc.pi = -0.1;
    CHECK_THROWS_AS(rc.validate(), DataError);
}

TEST_CASE("returned counterfactuals pass the direct re-check on seeded instances") {
    int solved = 0, infeasible = 0;
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const testutil::CfFixture fx = testutil::make_cf_fixture(seed);
        ControlLimits limits;
        for (CfMode mode : {CfMode::Operator, CfMode::Manufacturer}) {
            const CounterfactualResult r =
                solve_counterfactual(fx.x_star, fx.models(), fx.assets, mode, limits);
            if (r.has_solution) {
                ++solved;
                CHECK(r.valid);
                CHECK(r.max_violation <= 1e-6);
                // Integrality and the TT step limit, spot-checked directly.
                for (int f : {F_P, F_TN, F_TT}) {
                    CHECK(r.counterfactual[f] == std::round(r.counterfactual[f]));
                }
                CHECK(std::abs(r.counterfactual[F_TT] - fx.x_star[F_TT]) <=
                      limits.max_tt_change + 1e-9);
                CHECK(r.achieved_score <=
                      fx.classifier.threshold - fx.classifier.epsilon + 1e-6);
            } else {
                ++infeasible;
            }
        }
    }
    CHECK(solved > 10);  // the fixture family must exercise real solves
    CHECK(infeasible > 0);
}

TEST_CASE("manufacturer mode with beta 0 matches operator mode") {
    ControlLimits limits;
    limits.beta = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const testutil::CfFixture fx = testutil::make_cf_fixture(seed);
        const CounterfactualResult op =
            solve_counterfactual(fx.x_star, fx.models(), fx.assets, CfMode::Operator, limits);
        const CounterfactualResult mf = solve_counterfactual(fx.x_star, fx.models(), fx.assets,
                                                             CfMode::Manufacturer, limits);
        CHECK(op.status == mf.status);
        if (op.has_solution && mf.has_solution) {
            CHECK(op.objective == doctest::Approx(mf.objective).epsilon(1e-9));
        }
    }
}

TEST_CASE("manufacturer relaxation never worsens the objective") {
    ControlLimits limits;  // beta = 0.10
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const testutil::CfFixture fx = testutil::make_cf_fixture(seed);
        const CounterfactualResult op =
            solve_counterfactual(fx.x_star, fx.models(), fx.assets, CfMode::Operator, limits);
        const CounterfactualResult mf = solve_counterfactual(fx.x_star, fx.models(), fx.assets,
                                                             CfMode::Manufacturer, limits);
        if (op.has_solution) {
            REQUIRE(mf.has_solution);  // superset of the operator feasible set
            CHECK(mf.objective <= op.objective + 1e-9);
        }
    }
}

TEST_CASE("revenue mode: budget binds and the margin still holds") {
    ControlLimits limits;
    int exercised = 0;
    for (std::uint64_t seed = 1; seed <= 20 && exercised < 6; ++seed) {
        const testutil::CfFixture fx = testutil::make_cf_fixture(seed);
        RevenueConfig rev;  // pi = 0.10
        const RevenueResult rr =
            solve_revenue_driven(fx.x_star, fx.models(), fx.assets, limits, rev);
        if (!rr.stage1.has_solution) {
            CHECK(!rr.stage2.has_solution);  // infeasibility propagates
            continue;
        }
        ++exercised;
        REQUIRE(rr.stage2.has_solution);
        const double budget = (1.0 + rev.pi) * rr.stage1.counterfactual[F_P];
        CHECK(rr.stage2.counterfactual[F_P] <= budget + 1e-9);
        CHECK(rr.stage2.counterfactual[F_P] + 1e-9 >= rr.stage1.counterfactual[F_P]);
        CHECK(rr.stage2.valid);  // margin and couplings re-checked directly
        CHECK(rr.revenue_objective ==
              doctest::Approx(rev.price * rr.stage2.counterfactual[F_P]));

        // pi = 0: the revenue stage saturates exactly at the baseline power.
        RevenueConfig tight;
        tight.pi = 0.0;
        const RevenueResult rr0 =
            solve_revenue_driven(fx.x_star, fx.models(), fx.assets, limits, tight);
        REQUIRE(rr0.stage1.has_solution);
        REQUIRE(rr0.stage2.has_solution);
        CHECK(rr0.stage2.counterfactual[F_P] ==
              doctest::Approx(rr0.stage1.counterfactual[F_P]));
    }
    CHECK(exercised > 0);
}

TEST_CASE("revenue mode: stage-1 infeasibility propagates") {
    testutil::CfFixture fx = testutil::make_cf_fixture(3);
    fx.classifier.epsilon = 1e9;  // margin unreachable for any point
    ControlLimits limits;
    RevenueConfig rev;
    const RevenueResult rr = solve_revenue_driven(fx.x_star, fx.models(), fx.assets, limits, rev);
    CHECK(!rr.stage1.has_solution);
    CHECK(rr.stage1.status == SolveStatus::Infeasible);
    CHECK(!rr.stage2.has_solution);
}

TEST_CASE("enlarging the margin never improves the optimum") {
    ControlLimits limits;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        testutil::CfFixture fx = testutil::make_cf_fixture(seed);
        const double eps0 = fx.classifier.epsilon;
        CounterfactualResult prev;
        bool prev_feasible = false;
        double prev_obj = 0.0;
        for (double mult : {1.0, 3.0, 9.0}) {
            fx.classifier.epsilon = eps0 * mult;
            const CounterfactualResult r =
                solve_counterfactual(fx.x_star, fx.models(), fx.assets, CfMode::Operator, limits);
            if (prev_feasible) {
                // A larger margin shrinks the feasible set: either infeasible
                // now or no better than before.
                if (r.has_solution) CHECK(r.objective + 1e-9 >= prev_obj);
            }
            prev_feasible = r.has_solution;
            prev_obj = r.objective;
            if (!r.has_solution) break;
        }
        (void)prev;
    }
}

TEST_CASE("empty tightened boxes short-circuit to Infeasible") {
    testutil::CfFixture fx = feasible_start_fixture();
    // Surrogate output far outside the TN data box: the band cannot intersect.
    fx.n.base = 300.0;
    ControlLimits limits;
    const CounterfactualProblem built =
        build_operator_problem(fx.x_star, fx.models(), fx.assets, limits);
    CHECK(built.trivially_infeasible);
    const CounterfactualResult r =
        solve_counterfactual(fx.x_star, fx.models(), fx.assets, CfMode::Operator, limits);
    CHECK(r.status == SolveStatus::Infeasible);
    CHECK(!r.has_solution);
}

TEST_CASE("distance objective is invariant under consistent unit rescaling") {
    const testutil::CfFixture fx = testutil::make_cf_fixture(8);
    testutil::Rand rnd(88);
    const double k = 10.0;
    SchemaAssets scaled = fx.assets;
    scaled.scales.mean[F_P] *= k;
    scaled.bounds.lower[F_P] *= k;
    scaled.bounds.upper[F_P] *= k;
    for (int i = 0; i < 1000; ++i) {
        FeatureVector a = fx.x_star, b = fx.x_star;
        a[F_P] = rnd.uniform(0.0, 50.0);
        b[F_P] = rnd.uniform(0.0, 50.0);
        a[F_TT] = rnd.uniform(34.0, 56.0);
        b[F_TT] = a[F_TT] + rnd.uniform(-5.0, 5.0);
        FeatureVector as = a, bs = b;
        as[F_P] *= k;
        bs[F_P] *= k;
        CHECK(distance_objective(a, b, fx.assets) ==
              doctest::Approx(distance_objective(as, bs, scaled)).epsilon(1e-12));
    }
}

TEST_CASE("relaxation argmin is invariant under rescaling the power units") {
    // Rescale every P-denominated quantity by k (data, bounds, curve,
    // classifier weights); the continuous relaxation must pick the same
    // physical point. Surrogates are held constant here: tree routing uses
    // unit-offset strictness on integer features, which is deliberately
    // lattice-dependent and therefore not unit-covariant.
    const double k = 10.0;
    int exercised = 0;
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        testutil::CfFixture fx = testutil::make_cf_fixture(seed);
        if (!fx.flagged) continue;
        // Pin the wind to a knot so p_max scales exactly with the curve and
        // the integer-clamped power boxes stay k-multiples of each other.
        fx.x_star[F_WS] = 10.0;
        fx.n.trees.clear();
        fx.n.base = fx.x_star[F_TN];
        fx.t.trees.clear();
        fx.t.base = fx.x_star[F_TT];
        ControlLimits limits;
        const CounterfactualProblem orig =
            build_operator_problem(fx.x_star, fx.models(), fx.assets, limits);
        if (orig.trivially_infeasible) continue;

        testutil::CfFixture sc = fx;
        sc.assets.scales.mean[F_P] *= k;
        sc.assets.bounds.lower[F_P] *= k;
        sc.assets.bounds.upper[F_P] *= k;
        std::vector<std::pair<double, double>> knots;
        for (auto [ws, kw] : fx.assets.curve.knots()) knots.emplace_back(ws, kw * k);
        sc.assets.curve = PowerCurve(knots);
        sc.x_star[F_P] *= k;
        // Classifier consumes raw P and PMAX: divide those columns by k.
        for (auto& row : sc.classifier.layers[0].weights) {
            row[F_P] /= k;
            row[10] /= k;  // PMAX is the 11th input
        }
        const CounterfactualProblem scaled =
            build_operator_problem(sc.x_star, sc.models(), sc.assets, limits);
        REQUIRE(!scaled.trivially_infeasible);

        const SolveResult r1 = solve_relaxation(orig.problem);
        const SolveResult r2 = solve_relaxation(scaled.problem);
        REQUIRE(r1.status == r2.status);
        if (r1.status != SolveStatus::Optimal) continue;
        ++exercised;
        CHECK(r1.objective == doctest::Approx(r2.objective).epsilon(1e-6));
        // The flat quadratic lets the argmin wobble within the convergence
        // tolerance; the objective identity above is the strict check.
        CHECK(r2.x[static_cast<size_t>(scaled.x_p)] ==
              doctest::Approx(k * r1.x[static_cast<size_t>(orig.x_p)]).epsilon(1e-3));
        CHECK(r2.x[static_cast<size_t>(scaled.x_tt)] ==
              doctest::Approx(r1.x[static_cast<size_t>(orig.x_tt)]).epsilon(1e-3));
    }
    CHECK(exercised > 0);
}
