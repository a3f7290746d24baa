#pragma once

#include <string>
#include <utility>
#include <vector>

#include "windcf/miqp.hpp"
#include "windcf/predictors.hpp"

namespace windcf {

/// A model input wired into an optimization problem: either a problem
/// variable or a fixed scalar (fixed features enter as point values).
struct ModelInput {
    int var = -1;       // problem variable index, or -1 for a constant
    double value = 0.0; // the constant when var < 0

    static ModelInput variable(int v) { return ModelInput{v, 0.0}; }
    static ModelInput constant(double c) { return ModelInput{-1, c}; }
};

/// Per-neuron pre-activation intervals, layer by layer.
struct ActivationBounds {
    std::vector<std::vector<std::pair<double, double>>> pre;
};

// Sound interval propagation through the network. Every input interval must
// be finite; throws DataError otherwise.
ActivationBounds propagate_bounds(const MlpClassifier& model,
                                  const std::vector<std::pair<double, double>>& input_bounds);

// Input intervals implied by problem bounds / constants.
std::vector<std::pair<double, double>> input_intervals(const std::vector<ModelInput>& inputs,
                                                       const MiqpProblem& problem);

/// Exact big-M encoding of the network; returns the score variable.
/// Stable neurons are folded into affine expressions; each unstable ReLU
/// contributes one binary and four rows with its interval as big-M.
int encode_mlp(const MlpClassifier& model, const std::vector<ModelInput>& inputs,
               MiqpProblem& problem, const std::string& prefix = "mlp");

/// Output range of the ensemble over the given input boxes
/// (reachable-leaf min/max, accumulated per tree).
std::pair<double, double> tree_ensemble_range(
    const TreeEnsembleRegressor& model,
    const std::vector<std::pair<double, double>>& intervals);

/// Exact encoding of the additive tree ensemble; returns the output variable.
/// One binary per reachable leaf, one assignment row per tree; leaf
/// activation implies its undecided path conditions via big-M rows built from
/// the variable bounds. Splits decided by the input boxes are folded away.
int encode_tree_ensemble(const TreeEnsembleRegressor& model,
                         const std::vector<ModelInput>& inputs, MiqpProblem& problem,
                         double delta_split = 1e-6, const std::string& prefix = "tree");

} // namespace windcf
