#pragma once

#include <array>
#include <string>

#include "windcf/encode.hpp"
#include "windcf/miqp.hpp"
#include "windcf/predictors.hpp"
#include "windcf/schema.hpp"
#include "windcf/solver.hpp"

namespace windcf {

enum class CfMode { Operator, Manufacturer, Revenue };

std::string to_string(CfMode m);
CfMode cf_mode_from_string(const std::string& s);

/// Physical limits of the control step.
struct ControlLimits {
    double max_tt_change = 30.0;   // m_dT: max transformer-temperature move per step, deg C
    double beta = 0.10;            // manufacturer temperature slack (fraction)
    double coupling_tol = 0.5;     // allowed gap between integral temps and the
                                   // regressor surrogates (deg C)
    void validate() const;
};

struct RevenueConfig {
    double price = 100.0;  // euro / MWh
    double pi = 0.10;      // allowed power raise above the stage-1 counterfactual
    void validate() const;
};

/// A built instance problem plus the handles needed to read solutions.
struct CounterfactualProblem {
    MiqpProblem problem;
    int x_p = -1, x_tn = -1, x_tt = -1;
    int score_var = -1, n_out = -1, t_out = -1;
    bool trivially_infeasible = false;  // a tightened box came out empty
    double p_max_value = 0.0;
    double epsilon = 0.0;
};

struct CfModels {
    const MlpClassifier* classifier = nullptr;
    const TreeEnsembleRegressor* n = nullptr;  // nacelle-temperature surrogate
    const TreeEnsembleRegressor* t = nullptr;  // transformer-temperature surrogate
};

// Distance-minimizing problem with the classifier margin, the regressor
// coupling bands, data boxes for TN/TT, the power-curve cap on P, pinned
// fixed features, and integral controllables. The transformer-temperature
// step limit is folded into the TT box.
CounterfactualProblem build_operator_problem(const FeatureVector& x_star, const CfModels& models,
                                             const SchemaAssets& assets,
                                             const ControlLimits& limits);

// Same, with the temperature coupling relaxed to a multiplicative +/- beta
// band around the surrogate outputs.
CounterfactualProblem build_manufacturer_problem(const FeatureVector& x_star,
                                                 const CfModels& models,
                                                 const SchemaAssets& assets,
                                                 const ControlLimits& limits);

struct CounterfactualResult {
    SolveStatus status = SolveStatus::Infeasible;
    bool has_solution = false;
    FeatureVector counterfactual;                  // x* with P/TN/TT replaced
    double objective = 0.0;                        // normalized squared distance
    std::array<double, kNumFeatures> delta{};      // x - x*
    double achieved_score = 0.0;
    double n_prediction = 0.0, t_prediction = 0.0; // direct surrogate evaluations
    double gap = 0.0;
    double solve_time_sec = 0.0;
    long nodes = 0;
    double max_violation = 0.0;  // from the direct re-check
    bool valid = false;
    std::string note;

    std::string to_json() const;
};

struct RevenueResult {
    CounterfactualResult stage1;  // operator-mode baseline x~
    CounterfactualResult stage2;  // revenue-maximizing solution
    double revenue_objective = 0.0;  // r * x_P of stage 2
};

// Build + solve + re-check for operator or manufacturer mode.
CounterfactualResult solve_counterfactual(const FeatureVector& x_star, const CfModels& models,
                                          const SchemaAssets& assets, CfMode mode,
                                          const ControlLimits& limits,
                                          const SolveConfig& cfg = {});

// Two-stage revenue-driven variant: stage 1 is the operator problem; stage 2
// maximizes r*x_P under the same constraints plus x_P <= (1+pi)*x~_P.
RevenueResult solve_revenue_driven(const FeatureVector& x_star, const CfModels& models,
                                   const SchemaAssets& assets, const ControlLimits& limits,
                                   const RevenueConfig& rev, const SolveConfig& cfg = {});

/// Direct (encoding-free) evaluation of every model constraint at x.
struct ValidityReport {
    bool ok = false;
    double max_violation = 0.0;
    std::string worst;
};

ValidityReport check_counterfactual(const FeatureVector& x_star, const FeatureVector& x,
                                    const CfModels& models, const SchemaAssets& assets,
                                    CfMode mode, const ControlLimits& limits, double tol = 1e-6);

// The distance objective (7-style): sum over controllables of
// (x_j - x*_j)^2 / mean_j^2.
double distance_objective(const FeatureVector& x_star, const FeatureVector& x,
                          const SchemaAssets& assets);

} // namespace windcf
