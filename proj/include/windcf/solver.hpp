#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "windcf/miqp.hpp"

namespace windcf {

enum class BranchRule { MostFractional, LowestIndex };
enum class NodeSelection { BestBoundPlunge, DepthFirst };

struct SolveConfig {
    double time_limit_sec = 900.0;   // 15 minutes
    double gap_target = 1e-4;        // relative, 0.01%
    double int_tol = 1e-6;
    double feas_tol = 1e-9;
    NodeSelection node_selection = NodeSelection::BestBoundPlunge;
    BranchRule branch_rule = BranchRule::MostFractional;
    std::ostream* node_log = nullptr;  // optional text stream of node events
};

enum class SolveStatus { Optimal, FeasibleAtLimit, Infeasible, Unbounded };

std::string to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    bool has_incumbent = false;
    std::vector<double> x;       // incumbent assignment
    double objective = 0.0;      // incumbent objective (minimization)
    double best_bound = 0.0;     // proven lower bound
    double gap = 0.0;            // (objective - bound) / max(1, |objective|)
    long node_count = 0;
    double wall_time_sec = 0.0;
    int numeric_warnings = 0;    // nodes dropped after numerical failure
    std::vector<double> incumbent_history;  // objective after each improvement
};

/// Exact branch-and-bound over the problem's binary and integer variables.
/// Node relaxations are LPs; a quadratic objective is handled by outer-
/// approximation cuts with an active-set polish step.
SolveResult solve(const MiqpProblem& problem, const SolveConfig& cfg = {});

/// Continuous relaxation (integrality dropped) of the problem.
SolveResult solve_relaxation(const MiqpProblem& problem, const SolveConfig& cfg = {});

} // namespace windcf
