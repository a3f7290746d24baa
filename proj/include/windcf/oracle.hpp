#pragma once

#include "windcf/counterfactual.hpp"
#include "windcf/miqp.hpp"
#include "windcf/solver.hpp"

namespace windcf {

/// Exhaustive integral grid search over (P, TN, TT). Feasibility is checked
/// by direct model evaluation, never through the MIP encoding.
struct GridSearchResult {
    bool feasible = false;
    FeatureVector best;
    double objective = kInf;
    long evaluated = 0;
    long feasible_count = 0;
};

GridSearchResult brute_force_counterfactual(const FeatureVector& x_star, const CfModels& models,
                                            const SchemaAssets& assets, CfMode mode,
                                            const ControlLimits& limits, int grid_step = 1,
                                            long max_points = 1000000);

/// Enumeration of every assignment of the integral variables, solving the
/// continuous relaxation for each pattern.
struct EnumerateResult {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
    long patterns = 0;
};

EnumerateResult enumerate_miqp(const MiqpProblem& problem, long max_patterns = (1L << 22));

} // namespace windcf
