#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "windcf/errors.hpp"
#include "windcf/schema.hpp"
#include "windcf/synth.hpp"

using namespace windcf;

namespace {

FeatureVector sample_at(std::int64_t ts, double p, double tn, double tt, double ta, double ws) {
    FeatureVector fv;
    fv.timestamp = ts;
    fv[F_P] = p;
    fv[F_TN] = tn;
    fv[F_TT] = tt;
    fv[F_TA] = ta;
    fv[F_WS] = ws;
    apply_date_features(fv);
    return fv;
}

}  // namespace

TEST_CASE("power curve: endpoints and interpolation") {
    const PowerCurve curve = default_power_curve();
    CHECK(curve.p_max(0.0) == 0.0);                   // below cut-in
    CHECK(curve.p_max(2.5) == 0.0);                   // still below cut-in
    CHECK(curve.p_max(15.0) == curve.rated_power());  // rated-speed knot
    CHECK(curve.p_max(40.0) == curve.rated_power());  // constant beyond last knot
    // Midpoint of the (6,580)-(7,990) segment, computed by hand.
    CHECK(curve.p_max(6.5) == doctest::Approx(785.0).epsilon(1e-12));
    CHECK(curve.cut_in_speed() == doctest::Approx(3.0));
    CHECK_THROWS_AS(curve.p_max(-0.1), std::invalid_argument);
}

TEST_CASE("power curve: monotone in wind speed") {
    const PowerCurve curve = default_power_curve();
    testutil::Rand rnd(11);
    for (int i = 0; i < 1000; ++i) {
        double a = rnd.uniform(0.0, 30.0), b = rnd.uniform(0.0, 30.0);
        if (a > b) std::swap(a, b);
        CHECK(curve.p_max(a) <= curve.p_max(b) + 1e-12);
    }
}

TEST_CASE("power curve: construction rejects bad knot tables") {
    CHECK_THROWS_AS(PowerCurve({{0.0, 0.0}}), DataError);
    CHECK_THROWS_AS(PowerCurve({{0.0, 0.0}, {0.0, 5.0}}), DataError);   // non-increasing ws
    CHECK_THROWS_AS(PowerCurve({{0.0, 10.0}, {5.0, 5.0}}), DataError);  // decreasing power
}

TEST_CASE("compute_bounds: degenerate and simple cases") {
    std::vector<FeatureVector> one{sample_at(0, 100, 20, 40, 10, 5)};
    const FeatureBounds b1 = compute_bounds(one);
    CHECK(b1.lower[F_P] == 100);
    CHECK(b1.upper[F_P] == 100);

    std::vector<FeatureVector> two{sample_at(0, 0, 20, 40, 10, 5),
                                   sample_at(600, 5000, 22, 44, 12, 9)};
    const FeatureBounds b2 = compute_bounds(two);
    CHECK(b2.lower[F_P] == 0);
    CHECK(b2.upper[F_P] == 5000);

    CHECK_THROWS_AS(compute_bounds({}), DataError);
}

TEST_CASE("compute_bounds: matches an independent second pass on synthetic data") {
    GeneratorSpec spec;
    spec.duration_years = 0.05;
    spec.seed = 5;
    const auto data = generate(spec).samples;
    const FeatureBounds b = compute_bounds(data);
    for (int f = 0; f < kNumFeatures; ++f) {
        // Independent scan, sample-major instead of feature-major.
        double lo = data[0][f], hi = data[0][f];
        for (const auto& s : data) {
            if (s[f] < lo) lo = s[f];
            if (s[f] > hi) hi = s[f];
        }
        CHECK(b.lower[f] == lo);
        CHECK(b.upper[f] == hi);
        for (const auto& s : data) {
            CHECK(s[f] >= b.lower[f]);
            CHECK(s[f] <= b.upper[f]);
        }
    }
}

TEST_CASE("compute_scales: means and error paths") {
    std::vector<FeatureVector> two{sample_at(0, 10, 10, 10, 0, 0),
                                   sample_at(600, 20, 20, 20, 0, 0)};
    const NormalizationScales s = compute_scales(two);
    CHECK(s.mean[F_P] == doctest::Approx(15.0));

    std::vector<FeatureVector> constant{sample_at(0, 7, 7, 7, 1, 1),
                                        sample_at(600, 7, 7, 7, 1, 1)};
    CHECK(compute_scales(constant).mean[F_TT] == doctest::Approx(7.0));

    // Zero mean on a controllable feature is rejected.
    std::vector<FeatureVector> zero{sample_at(0, 0, 10, 10, 0, 0)};
    CHECK_THROWS_AS(compute_scales(zero), DataError);
    CHECK_THROWS_AS(compute_scales({}), DataError);
}

TEST_CASE("compute_scales: agrees with a Kahan-summed reference mean") {
    GeneratorSpec spec;
    spec.duration_years = 0.05;
    spec.seed = 6;
    const auto data = generate(spec).samples;
    const NormalizationScales s = compute_scales(data);
    for (int f : {F_P, F_TN, F_TT}) {
        double sum = 0.0, comp = 0.0;
        for (const auto& fv : data) {
            const double y = fv[f] - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        const double ref = sum / static_cast<double>(data.size());
        CHECK(s.mean[f] == doctest::Approx(ref).epsilon(1e-9));
    }
}

TEST_CASE("schema: standard layout and validation") {
    const FeatureSchema s = FeatureSchema::standard();
    s.validate();
    CHECK(s.index_of("P") == F_P);
    CHECK(s.index_of("minute") == F_MINUTE);
    CHECK(s.is_controllable(F_TT));
    CHECK(!s.is_controllable(F_WS));
    CHECK_THROWS_AS(s.index_of("bogus"), DataError);

    FeatureSchema broken = s;
    broken.fixed.pop_back();  // no longer covers all features
    CHECK_THROWS_AS(broken.validate(), DataError);
}

TEST_CASE("assets config round-trips bit-exactly") {
    GeneratorSpec spec;
    spec.duration_years = 0.03;
    spec.seed = 9;
    const auto data = generate(spec).samples;
    SchemaAssets assets;
    assets.schema = FeatureSchema::standard();
    assets.bounds = compute_bounds(data);
    assets.scales = compute_scales(data);
    assets.curve = default_power_curve();
    const std::string once = assets.to_json();
    const SchemaAssets reparsed = SchemaAssets::from_json(once);
    CHECK(reparsed.to_json() == once);
    CHECK(reparsed.bounds.lower[F_TT] == assets.bounds.lower[F_TT]);
    CHECK(reparsed.curve.p_max(6.5) == assets.curve.p_max(6.5));
}

TEST_CASE("calendar helpers round-trip") {
    const std::int64_t ts = unix_from_iso8601("2023-05-21T13:40:00Z");
    CHECK(iso8601_from_unix(ts) == "2023-05-21T13:40:00Z");
    const CivilTime c = civil_from_unix(ts);
    CHECK(c.year == 2023);
    CHECK(c.month == 5);
    CHECK(c.day == 21);
    CHECK(c.hour == 13);
    CHECK(c.minute == 40);
    CHECK(unix_from_civil(c) == ts);
    CHECK_THROWS_AS(unix_from_iso8601("not-a-date"), DataError);

    FeatureVector fv;
    fv.timestamp = ts;
    apply_date_features(fv);
    CHECK(fv[F_YEAR] == 2023);
    CHECK(fv[F_MINUTE] == 40);
}
