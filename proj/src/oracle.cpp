#include "windcf/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "windcf/errors.hpp"

namespace windcf {

GridSearchResult brute_force_counterfactual(const FeatureVector& x_star, const CfModels& models,
                                            const SchemaAssets& assets, CfMode mode,
                                            const ControlLimits& limits, int grid_step,
                                            long max_points) {
    if (grid_step < 1) throw DataError("oracle: grid step must be >= 1");
    limits.validate();
    const auto& schema = assets.schema;
    const double pmax = assets.curve.p_max(x_star[F_WS]);
    const double beta = mode == CfMode::Manufacturer ? limits.beta : 0.0;
    const double tau = limits.coupling_tol;
    const double s_cap = models.classifier->threshold - models.classifier->epsilon;

    const long p_lo = 0, p_hi = static_cast<long>(std::floor(pmax + 1e-9));
    const long tn_lo = static_cast<long>(std::ceil(assets.bounds.lower[F_TN] - 1e-9));
    const long tn_hi = static_cast<long>(std::floor(assets.bounds.upper[F_TN] + 1e-9));
    const long tt_lo = static_cast<long>(
        std::ceil(std::max(assets.bounds.lower[F_TT], x_star[F_TT] - limits.max_tt_change) - 1e-9));
    const long tt_hi = static_cast<long>(
        std::floor(std::min(assets.bounds.upper[F_TT], x_star[F_TT] + limits.max_tt_change) + 1e-9));

    GridSearchResult res;
    if (p_hi < p_lo || tn_hi < tn_lo || tt_hi < tt_lo) return res;  // empty grid: infeasible
    auto count_of = [&](long lo, long hi) { return (hi - lo) / grid_step + 1; };
    const long total = count_of(p_lo, p_hi) * count_of(tn_lo, tn_hi) * count_of(tt_lo, tt_hi);
    if (total > max_points) {
        throw DataError("oracle: grid has " + std::to_string(total) + " points (cap " +
                        std::to_string(max_points) + "); shrink the ranges");
    }

    FeatureVector x = x_star;
    for (long p = p_lo; p <= p_hi; p += grid_step) {
        for (long tn = tn_lo; tn <= tn_hi; tn += grid_step) {
            for (long tt = tt_lo; tt <= tt_hi; tt += grid_step) {
                ++res.evaluated;
                x[F_P] = static_cast<double>(p);
                x[F_TN] = static_cast<double>(tn);
                x[F_TT] = static_cast<double>(tt);
                // Surrogate coupling bands by direct prediction.
                const double n_pred = predict(
                    *models.n, model_inputs(models.n->inputs, x, schema, assets.curve));
                const double lo_n = std::min((1.0 - beta) * n_pred, (1.0 + beta) * n_pred) - tau;
                const double hi_n = std::max((1.0 - beta) * n_pred, (1.0 + beta) * n_pred) + tau;
                if (x[F_TN] < lo_n - 1e-9 || x[F_TN] > hi_n + 1e-9) continue;
                const double t_pred = predict(
                    *models.t, model_inputs(models.t->inputs, x, schema, assets.curve));
                const double lo_t = std::min((1.0 - beta) * t_pred, (1.0 + beta) * t_pred) - tau;
                const double hi_t = std::max((1.0 - beta) * t_pred, (1.0 + beta) * t_pred) + tau;
                if (x[F_TT] < lo_t - 1e-9 || x[F_TT] > hi_t + 1e-9) continue;
                // Classifier margin.
                const double s = score(*models.classifier,
                                       model_inputs(models.classifier->inputs, x, schema,
                                                    assets.curve));
                if (s > s_cap + 1e-9) continue;
                ++res.feasible_count;
                double obj = 0.0;
                for (int f : {F_P, F_TN, F_TT}) {
                    const double mean = assets.scales.mean[static_cast<size_t>(f)];
                    const double d = x[f] - x_star[f];
                    obj += d * d / (mean * mean);
                }
                if (obj < res.objective) {
                    res.objective = obj;
                    res.best = x;
                    res.feasible = true;
                }
            }
        }
    }
    return res;
}

EnumerateResult enumerate_miqp(const MiqpProblem& problem, long max_patterns) {
    problem.validate();
    std::vector<int> ivars;
    std::vector<long> lo, hi;
    long binaries = 0;
    double patterns = 1.0;
    for (int j = 0; j < problem.num_vars(); ++j) {
        const auto& v = problem.variables()[static_cast<size_t>(j)];
        if (v.type == VarType::Continuous) continue;
        if (v.type == VarType::Binary) ++binaries;
        ivars.push_back(j);
        lo.push_back(static_cast<long>(std::ceil(v.lower - 1e-9)));
        hi.push_back(static_cast<long>(std::floor(v.upper + 1e-9)));
        if (hi.back() < lo.back()) {
            EnumerateResult r;
            r.status = SolveStatus::Infeasible;
            return r;
        }
        patterns *= static_cast<double>(hi.back() - lo.back() + 1);
    }
    if (binaries > 20) throw DataError("enumerate_miqp: more than 20 binary variables");
    if (patterns > static_cast<double>(max_patterns)) {
        throw DataError("enumerate_miqp: pattern count overflow (" + std::to_string(patterns) +
                        " > " + std::to_string(max_patterns) + ")");
    }

    EnumerateResult res;
    if (ivars.empty()) {
        const SolveResult r = solve_relaxation(problem);
        res.patterns = 1;
        switch (r.status) {
            case SolveStatus::Optimal:
                res.status = SolveStatus::Optimal;
                res.x = r.x;
                res.objective = r.objective;
                break;
            case SolveStatus::Unbounded: res.status = SolveStatus::Unbounded; break;
            default: res.status = SolveStatus::Infeasible; break;
        }
        return res;
    }

    // For each pattern the integral variables are constants: fold them out
    // once into a reduced problem over the continuous variables, leaving
    // per-pattern right-hand sides and an objective offset.
    std::vector<int> cont_vars, var_to_cont(static_cast<size_t>(problem.num_vars()), -1);
    std::vector<int> var_to_ivar(static_cast<size_t>(problem.num_vars()), -1);
    for (int j = 0; j < problem.num_vars(); ++j) {
        if (problem.variables()[static_cast<size_t>(j)].type == VarType::Continuous) {
            var_to_cont[static_cast<size_t>(j)] = static_cast<int>(cont_vars.size());
            cont_vars.push_back(j);
        }
    }
    for (size_t k = 0; k < ivars.size(); ++k) var_to_ivar[static_cast<size_t>(ivars[k])] = static_cast<int>(k);

    struct RowSplit {
        std::vector<LinearTerm> cont;          // terms over reduced indices
        std::vector<std::pair<int, double>> pinned;  // (ivar index, coef)
        ConstraintSense sense;
        double rhs;
    };
    std::vector<RowSplit> rows;
    for (const auto& c : problem.constraints()) {
        RowSplit rs;
        rs.sense = c.sense;
        rs.rhs = c.rhs;
        for (const auto& t : c.terms) {
            const int ci = var_to_cont[static_cast<size_t>(t.var)];
            if (ci >= 0) rs.cont.push_back(LinearTerm{ci, t.coef});
            else rs.pinned.emplace_back(var_to_ivar[static_cast<size_t>(t.var)], t.coef);
        }
        rows.push_back(std::move(rs));
    }
    // Objective pieces.
    struct PinQuad {
        int ivar;
        double a, c;
    };
    std::vector<PinQuad> pin_quads;
    MiqpProblem reduced;  // rebuilt rhs per pattern; structure fixed
    for (int j : cont_vars) {
        const auto& v = problem.variables()[static_cast<size_t>(j)];
        reduced.add_variable(v.name, v.lower, v.upper);
    }
    for (const auto& q : problem.quadratic_terms()) {
        const int ci = var_to_cont[static_cast<size_t>(q.var)];
        if (ci >= 0) reduced.add_quadratic_objective_term(ci, q.coef, q.center);
        else pin_quads.push_back({var_to_ivar[static_cast<size_t>(q.var)], q.coef, q.center});
    }
    std::vector<std::pair<int, double>> pin_lin;  // (ivar, coef)
    for (int j = 0; j < problem.num_vars(); ++j) {
        const double b = problem.linear_objective()[static_cast<size_t>(j)];
        if (b == 0.0) continue;
        const int ci = var_to_cont[static_cast<size_t>(j)];
        if (ci >= 0) reduced.add_linear_objective_term(ci, b);
        else pin_lin.emplace_back(var_to_ivar[static_cast<size_t>(j)], b);
    }
    for (const auto& rs : rows) {
        LinearConstraint c;
        c.terms = rs.cont;
        c.sense = rs.sense;
        c.rhs = rs.rhs;  // adjusted per pattern below
        reduced.add_constraint(std::move(c));
    }

    std::vector<long> cur = lo;
    bool done = false;
    double best = kInf;
    std::vector<double> best_x;
    std::vector<long> best_pattern;
    std::vector<double> vals(ivars.size());
    while (!done) {
        ++res.patterns;
        for (size_t k = 0; k < ivars.size(); ++k) vals[k] = static_cast<double>(cur[k]);
        double offset = problem.objective_constant();
        for (const auto& pq : pin_quads) {
            const double d = vals[static_cast<size_t>(pq.ivar)] - pq.c;
            offset += pq.a * d * d;
        }
        for (const auto& [iv, b] : pin_lin) offset += b * vals[static_cast<size_t>(iv)];
        bool row_feasible = true;
        for (size_t r = 0; r < rows.size(); ++r) {
            double adj = rows[r].rhs;
            for (const auto& [iv, coef] : rows[r].pinned) adj -= coef * vals[static_cast<size_t>(iv)];
            if (rows[r].cont.empty()) {
                // Fully pinned row: decide feasibility directly.
                const double lhs = 0.0;
                switch (rows[r].sense) {
                    case ConstraintSense::LessEqual: row_feasible &= lhs <= adj + 1e-9; break;
                    case ConstraintSense::GreaterEqual: row_feasible &= lhs >= adj - 1e-9; break;
                    case ConstraintSense::Equal: row_feasible &= std::abs(lhs - adj) <= 1e-9; break;
                }
            }
            // Safe even when fully pinned: the reduced row is 0 (sense) adj.
            reduced.constraints()[r].rhs = adj;
            if (!row_feasible) break;
        }
        if (row_feasible) {
            // The offset alone may already lose to the incumbent pattern.
            if (cont_vars.empty()) {
                if (offset < best) {
                    best = offset;
                    best_x.assign(static_cast<size_t>(problem.num_vars()), 0.0);
                    best_pattern = cur;
                }
            } else {
                const SolveResult r = solve_relaxation(reduced);
                if (r.status == SolveStatus::Unbounded) {
                    res.status = SolveStatus::Unbounded;
                    return res;
                }
                if (r.status == SolveStatus::Optimal && r.objective + offset < best) {
                    best = r.objective + offset;
                    best_x.assign(static_cast<size_t>(problem.num_vars()), 0.0);
                    for (size_t ci = 0; ci < cont_vars.size(); ++ci) {
                        best_x[static_cast<size_t>(cont_vars[ci])] = r.x[ci];
                    }
                    best_pattern = cur;
                }
            }
        }
        // Odometer increment.
        size_t k = 0;
        while (true) {
            if (k == ivars.size()) {
                done = true;
                break;
            }
            if (++cur[k] <= hi[k]) break;
            cur[k] = lo[k];
            ++k;
        }
    }
    if (best_pattern.empty() && !std::isfinite(best)) {
        res.status = SolveStatus::Infeasible;
    } else {
        res.status = SolveStatus::Optimal;
        res.objective = best;
        for (size_t k = 0; k < ivars.size(); ++k) {
            best_x[static_cast<size_t>(ivars[k])] = static_cast<double>(best_pattern[k]);
        }
        res.x = std::move(best_x);
    }
    return res;
}

} // namespace windcf
