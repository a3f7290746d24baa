#pragma once

#include <span>
#include <string>
#include <vector>

#include "windcf/schema.hpp"

namespace windcf {

enum class Activation { Relu, Identity };

struct MlpLayer {
    // weights[o][i]: input i -> output o
    std::vector<std::vector<double>> weights;
    std::vector<double> biases;
    Activation act = Activation::Relu;

    size_t out_dim() const { return biases.size(); }
    size_t in_dim() const { return weights.empty() ? 0 : weights[0].size(); }
};

/// Dense ReLU network whose single output is the pre-sigmoid score.
/// class 1 (anomalous) iff score > threshold; `epsilon` is the score margin
/// the counterfactual must clear below the threshold.
struct MlpClassifier {
    std::vector<std::string> inputs;  // feature names, in model input order
    std::vector<MlpLayer> layers;
    double threshold = 0.0;  // s(tau); 0.0 corresponds to tau = 0.5
    double epsilon = 0.0;

    size_t in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    void validate() const;

    std::string to_json() const;
    static MlpClassifier from_json(const std::string& text);
    static MlpClassifier load(const std::string& path);
    void save(const std::string& path) const;
};

// Pre-sigmoid score of the network at `x` (model input order).
double score(const MlpClassifier& model, std::span<const double> x);
// 1 iff score(x) > threshold. Ties go to class 0: the good region is closed.
int classify(const MlpClassifier& model, std::span<const double> x);

/// Additive regression trees. Routing: go left iff value < threshold.
struct TreeNode {
    bool leaf = false;
    int feature = -1;     // internal nodes
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0;   // leaves
};

struct Tree {
    std::vector<TreeNode> nodes;  // node 0 is the root

    double predict(std::span<const double> x) const;
    void validate(size_t in_dim) const;
    int leaf_count() const;
};

struct TreeEnsembleRegressor {
    std::vector<std::string> inputs;
    double base = 0.0;
    std::vector<Tree> trees;

    void validate() const;

    std::string to_json() const;
    static TreeEnsembleRegressor from_json(const std::string& text);
    static TreeEnsembleRegressor load(const std::string& path);
    void save(const std::string& path) const;
};

// base + sum of per-tree leaf values, in tree order.
double predict(const TreeEnsembleRegressor& model, std::span<const double> x);

// Builds the model-input vector for `fv` by feature name. "PMAX" resolves to
// curve.p_max(fv[WS]); every other name must be a schema feature.
std::vector<double> model_inputs(const std::vector<std::string>& input_names,
                                 const FeatureVector& fv, const FeatureSchema& schema,
                                 const PowerCurve& curve);

// Classifier input order: the ten schema features followed by PMAX.
std::vector<std::string> classifier_input_names(const FeatureSchema& schema);
// Regressor input order per target: (TA, P, other-temperature, WS, date).
std::vector<std::string> regressor_input_names(const FeatureSchema& schema, int target_feature);

} // namespace windcf
