#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "windcf/errors.hpp"
#include "windcf/synth.hpp"
#include "windcf/train.hpp"

using namespace windcf;

namespace {

FeatureVector labeled(std::int64_t ts, int label) {
    FeatureVector fv;
    fv.timestamp = ts;
    fv[F_P] = 100;
    fv[F_TN] = 20;
    fv[F_TT] = 40;
    fv[F_TA] = 10;
    fv[F_WS] = 7;
    apply_date_features(fv);
    fv.label = label;
    return fv;
}

// Two well-separated Gaussian blobs in (TT, TN), labels by blob.
std::vector<FeatureVector> blob_set(std::uint64_t seed, size_t n_per_class, double sep_sigmas) {
    testutil::Rand rnd(seed);
    std::vector<FeatureVector> out;
    const double sigma = 1.0;
    auto normal = [&] {
        const double u1 = std::max(1e-12, rnd.uniform());
        const double u2 = rnd.uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    };
    for (size_t i = 0; i < 2 * n_per_class; ++i) {
        const int label = i % 2;
        FeatureVector fv = labeled(static_cast<std::int64_t>(i) * 600, label);
        const double off = label == 1 ? sep_sigmas * sigma : 0.0;
        fv[F_TT] = 40.0 + off + sigma * normal();
        fv[F_TN] = 20.0 + off + sigma * normal();
        out.push_back(fv);
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    return out;
}

}  // namespace

TEST_CASE("temporal_split: cutoff at the ceil(q*m)-th anomaly") {
    std::vector<FeatureVector> data;
    // 20 good then 10 anomalies at known timestamps.
    for (int i = 0; i < 20; ++i) data.push_back(labeled(i * 600, 0));
    for (int i = 0; i < 10; ++i) data.push_back(labeled((20 + i) * 600, 1));
    const TemporalSplit split = temporal_split(data, 0.7);
    // 7th anomaly sits at timestamp (20+6)*600.
    CHECK(split.cutoff == 26 * 600);
    CHECK(split.train.size() == 27);
    CHECK(split.test.size() == 3);
    // Strict partition.
    CHECK(split.train.back().timestamp < split.test.front().timestamp);
}

TEST_CASE("temporal_split: anomalies near the end give a tiny but valid partition") {
    std::vector<FeatureVector> data;
    for (int i = 0; i < 50; ++i) data.push_back(labeled(i * 600, (i >= 40 && i < 45) ? 1 : 0));
    const TemporalSplit split = temporal_split(data, 0.7);
    CHECK(split.test.size() >= 1);  // tiny test set is fine
    CHECK(split.train.size() + split.test.size() == data.size());
    CHECK(split.train.back().timestamp < split.test.front().timestamp);

    // Anomalies running to the very last sample degenerate to an empty test
    // set; the partition is still well-formed.
    std::vector<FeatureVector> tail;
    for (int i = 0; i < 50; ++i) tail.push_back(labeled(i * 600, i >= 48 ? 1 : 0));
    const TemporalSplit split2 = temporal_split(tail, 0.7);
    CHECK(split2.train.size() + split2.test.size() == tail.size());
    CHECK(split2.test.empty());
}

TEST_CASE("temporal_split: errors") {
    std::vector<FeatureVector> no_anomaly(5, labeled(0, 0));
    for (size_t i = 0; i < no_anomaly.size(); ++i) no_anomaly[i].timestamp = static_cast<std::int64_t>(i) * 600;
    CHECK_THROWS_AS(temporal_split(no_anomaly, 0.7), DataError);
    CHECK_THROWS_AS(temporal_split(no_anomaly, 1.5), DataError);
}

TEST_CASE("temporal_split: counts match an independent filter on synthetic data") {
    GeneratorSpec spec;
    spec.duration_years = 0.5;
    spec.seed = 13;
    const auto data = generate(spec).samples;
    const TemporalSplit split = temporal_split(data, 0.7);
    long train_anom = 0, test_anom = 0, total_anom = 0;
    for (const auto& s : data) {
        total_anom += s.label.value_or(0);
        if (s.timestamp <= split.cutoff) train_anom += s.label.value_or(0);
        else test_anom += s.label.value_or(0);
    }
    long split_train_anom = 0;
    for (const auto& s : split.train) split_train_anom += s.label.value_or(0);
    long split_test_anom = 0;
    for (const auto& s : split.test) split_test_anom += s.label.value_or(0);
    CHECK(split_train_anom == train_anom);
    CHECK(split_test_anom == test_anom);
    CHECK(split_train_anom >= static_cast<long>(std::ceil(0.7 * static_cast<double>(total_anom))));
}

TEST_CASE("undersample: ratios, determinism, clamping") {
    std::vector<FeatureVector> data;
    for (int i = 0; i < 100; ++i) data.push_back(labeled(i * 600, 1));
    for (int i = 0; i < 500; ++i) data.push_back(labeled((100 + i) * 600, 0));

    SamplerSpec spec;
    spec.ratio = 1.0;
    spec.seed = 5;
    const auto balanced = undersample(data, spec);
    long faults = 0, good = 0;
    for (const auto& s : balanced.samples) (s.label.value_or(0) == 1 ? faults : good)++;
    CHECK(faults == 100);  // all faults kept
    CHECK(good == 100);    // equal number of good samples

    spec.ratio = 1.25;
    const auto skewed = undersample(data, spec);
    faults = good = 0;
    for (const auto& s : skewed.samples) (s.label.value_or(0) == 1 ? faults : good)++;
    CHECK(faults == 100);
    CHECK(good == 80);  // 25% more faults than good samples

    // Determinism: same seed, same subset.
    const auto again = undersample(data, spec);
    REQUIRE(again.samples.size() == skewed.samples.size());
    for (size_t i = 0; i < again.samples.size(); ++i) {
        CHECK(again.samples[i].timestamp == skewed.samples[i].timestamp);
    }

    // Clamp when there are not enough good samples.
    std::vector<FeatureVector> scarce;
    for (int i = 0; i < 10; ++i) scarce.push_back(labeled(i * 600, 1));
    scarce.push_back(labeled(6000, 0));
    SamplerSpec tight;
    tight.ratio = 1.0;
    const auto clamped = undersample(scarce, tight);
    CHECK(clamped.clamped);
    CHECK(clamped.samples.size() == 11);

    std::vector<FeatureVector> single(3, labeled(0, 1));
    CHECK_THROWS_AS(undersample(single, spec), DataError);
}

TEST_CASE("train_mlp: separable blobs reach high test accuracy") {
    const auto train_set = blob_set(1, 150, 6.0);
    const auto test_set = blob_set(2, 200, 6.0);
    MlpTrainConfig cfg;
    cfg.seed = 3;
    cfg.max_epochs = 120;
    const MlpClassifier model = train_mlp(train_set, default_power_curve(), cfg);
    const TrainReport rep = evaluate_classifier(model, test_set, default_power_curve());
    CHECK(rep.standard_accuracy >= 0.95);
    CHECK(rep.total() == static_cast<long>(test_set.size()));
}

TEST_CASE("train_mlp: error paths") {
    const auto tiny = blob_set(1, 3, 6.0);
    MlpTrainConfig cfg;
    cfg.k_folds = 50;  // more folds than samples
    CHECK_THROWS_AS(train_mlp(tiny, default_power_curve(), cfg), DataError);

    std::vector<FeatureVector> one_class(20, labeled(0, 0));
    for (size_t i = 0; i < one_class.size(); ++i) one_class[i].timestamp = static_cast<std::int64_t>(i) * 600;
    MlpTrainConfig cfg2;
    CHECK_THROWS_AS(train_mlp(one_class, default_power_curve(), cfg2), DataError);
}

TEST_CASE("train_mlp: two-point set is memorized") {
    std::vector<FeatureVector> pair;
    FeatureVector a = labeled(0, 0), b = labeled(600, 1);
    a[F_TT] = 30;
    b[F_TT] = 80;
    pair.push_back(a);
    pair.push_back(b);
    MlpTrainConfig cfg;
    cfg.k_folds = 2;
    cfg.max_epochs = 400;
    cfg.patience = 400;
    cfg.batch_size = 2;
    const MlpClassifier model = train_mlp(pair, default_power_curve(), cfg);
    const TrainReport rep = evaluate_classifier(model, pair, default_power_curve());
    CHECK(rep.standard_accuracy == doctest::Approx(1.0));
}

TEST_CASE("train_mlp: determinism per seed") {
    const auto train_set = blob_set(4, 60, 6.0);
    MlpTrainConfig cfg;
    cfg.seed = 9;
    cfg.max_epochs = 40;
    const MlpClassifier m1 = train_mlp(train_set, default_power_curve(), cfg);
    const MlpClassifier m2 = train_mlp(train_set, default_power_curve(), cfg);
    CHECK(m1.to_json() == m2.to_json());
}

TEST_CASE("train_regressor: memorizes a target equal to an input feature") {
    // TT equals TA + 3 exactly; deep trees can represent the map on TA.
    std::vector<FeatureVector> data;
    testutil::Rand rnd(6);
    for (int i = 0; i < 400; ++i) {
        FeatureVector fv = labeled(i * 600, 0);
        fv[F_TA] = std::floor(rnd.uniform(0.0, 16.0));
        fv[F_TT] = fv[F_TA] + 3.0;
        data.push_back(fv);
    }
    RegressorTrainConfig cfg;
    cfg.trees = 220;
    cfg.max_depth = 5;
    cfg.min_samples_leaf = 1;
    cfg.learning_rate = 0.5;
    cfg.holdout_fraction = 0.0;
    const RegressorResult res = train_regressor(data, F_TT, cfg);
    const auto schema = FeatureSchema::standard();
    double worst = 0.0;
    for (const auto& s : data) {
        const double pred = predict(res.model,
                                    model_inputs(res.model.inputs, s, schema, default_power_curve()));
        worst = std::max(worst, std::abs(pred - s[F_TT]));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("train_regressor: constant target gives a constant model") {
    std::vector<FeatureVector> data;
    for (int i = 0; i < 100; ++i) data.push_back(labeled(i * 600, 0));
    RegressorTrainConfig cfg;
    const RegressorResult res = train_regressor(data, F_TN, cfg);
    CHECK(res.model.trees.empty());
    CHECK(!res.note.empty());
    CHECK(res.holdout_rmse == doctest::Approx(0.0));
    const auto schema = FeatureSchema::standard();
    const double pred = predict(res.model, model_inputs(res.model.inputs, data[0], schema,
                                                        default_power_curve()));
    CHECK(pred == doctest::Approx(20.0));
}

TEST_CASE("train_regressor: holdout RMSE below twice the injected noise") {
    GeneratorSpec spec;
    spec.duration_years = 0.6;
    spec.seed = 21;
    const auto out = generate(spec);
    // Use good samples only: anomalies deliberately break the controller law.
    std::vector<FeatureVector> good;
    for (const auto& s : out.samples) {
        if (s.label.value_or(0) == 0) good.push_back(s);
    }
    RegressorTrainConfig cfg;
    cfg.seed = 4;
    const RegressorResult res = train_regressor(good, F_TT, cfg);
    CHECK(res.holdout_rmse < 2.0 * out.truth.noise_tt);
    const RegressorResult res_n = train_regressor(good, F_TN, cfg);
    CHECK(res_n.holdout_rmse < 2.0 * out.truth.noise_tn);
}

TEST_CASE("risk preference: raising the fault ratio does not add false negatives") {
    // Averaged over seeds on one fixed synthetic split.
    GeneratorSpec gspec;
    gspec.duration_years = 0.7;
    gspec.seed = 31;
    const auto data = generate(gspec).samples;
    const TemporalSplit split = temporal_split(data, 0.7);
    double fn_balanced = 0.0, fn_skewed = 0.0;
    const int seeds = 5;
    for (int s = 0; s < seeds; ++s) {
        for (double ratio : {1.0, 1.25}) {
            SamplerSpec sampler;
            sampler.ratio = ratio;
            sampler.seed = 100 + static_cast<std::uint64_t>(s);
            const auto subset = undersample(split.train, sampler).samples;
            MlpTrainConfig cfg;
            cfg.seed = 200 + static_cast<std::uint64_t>(s);
            cfg.max_epochs = 60;
            cfg.k_folds = 3;
            cfg.learning_rates = {0.1};
            const MlpClassifier model = train_mlp(subset, default_power_curve(), cfg);
            const TrainReport rep = evaluate_classifier(model, split.test, default_power_curve());
            (ratio == 1.0 ? fn_balanced : fn_skewed) += static_cast<double>(rep.fn);
        }
    }
    CHECK(fn_skewed / seeds <= fn_balanced / seeds + 1e-9);
}
