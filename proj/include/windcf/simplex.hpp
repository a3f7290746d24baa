#pragma once

#include <vector>

#include "windcf/miqp.hpp"

namespace windcf {

/// Dense bounded-variable primal simplex. Internal engine behind
/// solver::solve_relaxation and the branch-and-bound node relaxations.
struct LpRow {
    std::vector<LinearTerm> terms;
    ConstraintSense sense = ConstraintSense::LessEqual;
    double rhs = 0.0;
};

struct LpProblem {
    int num_vars = 0;
    std::vector<double> lower, upper;  // per structural variable
    std::vector<double> objective;     // minimize c.x
    std::vector<LpRow> rows;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericFailure };

struct LpResult {
    LpStatus status = LpStatus::NumericFailure;
    std::vector<double> x;    // structural values (valid when Optimal)
    double objective = 0.0;
    std::vector<double> ray;  // structural ray when Unbounded
    int iterations = 0;
};

struct LpOptions {
    double feas_tol = 1e-9;
    double opt_tol = 1e-9;
    int max_iterations = 0;  // 0 = automatic from problem size
};

LpResult solve_lp(const LpProblem& lp, const LpOptions& opts = {});

} // namespace windcf
