#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windcf/predictors.hpp"
#include "windcf/schema.hpp"

namespace windcf {

/// Past/future split at the timestamp where a q-fraction of anomalies has
/// occurred.
struct SplitSpec {
    double q = 0.70;
};

struct TemporalSplit {
    std::vector<FeatureVector> train;  // timestamps <= cutoff
    std::vector<FeatureVector> test;   // timestamps > cutoff
    std::int64_t cutoff = 0;
};

TemporalSplit temporal_split(const std::vector<FeatureVector>& dataset, double q);

/// Undersampling: keep every fault, draw floor(faults / ratio) good samples.
struct SamplerSpec {
    double ratio = 1.0;  // 1.25 => 25% more faults than good samples
    std::uint64_t seed = 1;
};

struct UndersampleResult {
    std::vector<FeatureVector> samples;  // time-ordered
    bool clamped = false;  // requested more good samples than available
};

UndersampleResult undersample(const std::vector<FeatureVector>& train, const SamplerSpec& spec);

struct TrainReport {
    double standard_accuracy = 0.0;
    double balanced_accuracy = 0.0;
    double average_precision = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;  // positive class = anomaly (1)

    long total() const { return tp + fp + tn + fn; }
    std::string to_json() const;
};

TrainReport evaluate_classifier(const MlpClassifier& model,
                                const std::vector<FeatureVector>& samples,
                                const PowerCurve& curve);

struct MlpTrainConfig {
    std::vector<int> hidden = {8, 8};
    int k_folds = 5;
    std::uint64_t seed = 1;
    int max_epochs = 200;
    int batch_size = 32;
    int patience = 20;
    std::vector<double> learning_rates = {0.1, 0.03};  // the hyperparameter grid
    double epsilon_fraction = 0.01;  // margin as a fraction of the score range
};

// K-fold grid selection on balanced accuracy, then a final fit with early
// stopping; the input standardization is folded into the first layer.
// Throws DataError when the subset is single-class or K exceeds the samples.
MlpClassifier train_mlp(const std::vector<FeatureVector>& subset, const PowerCurve& curve,
                        const MlpTrainConfig& cfg);

struct RegressorTrainConfig {
    int trees = 25;
    int max_depth = 3;
    double learning_rate = 0.12;
    int min_samples_leaf = 20;
    double holdout_fraction = 0.2;
    std::uint64_t seed = 1;
};

struct RegressorResult {
    TreeEnsembleRegressor model;
    double holdout_rmse = 0.0;
    std::string note;  // e.g. constant-target warning
};

// Greedy CART gradient boosting on squared loss for target TN or TT;
// inputs follow regressor_input_names for the target.
RegressorResult train_regressor(const std::vector<FeatureVector>& train, int target_feature,
                                const RegressorTrainConfig& cfg);

/// The full training pipeline shared by the CLI and the python module:
/// temporal split, undersampling, classifier fit, surrogate fits on good
/// training samples, asset derivation, test-set report.
struct PipelineOptions {
    double q = 0.70;
    double ratio = 1.0;
    int k = 5;
    std::uint64_t seed = 1;
    int trees = 25;
    int depth = 3;
    bool scales_on_train = false;  // default: means over the full dataset
    PowerCurve curve = default_power_curve();
};

struct TrainedBundle {
    MlpClassifier classifier;
    TreeEnsembleRegressor n, t;
    SchemaAssets assets;
    TrainReport report;       // on the untouched, unbalanced test set
    double n_rmse = 0.0, t_rmse = 0.0;
    std::int64_t cutoff = 0;
    std::string notes;
};

TrainedBundle run_training(const std::vector<FeatureVector>& dataset,
                           const PipelineOptions& opts);

} // namespace windcf
