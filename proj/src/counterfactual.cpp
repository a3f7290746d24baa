#include "windcf/counterfactual.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "windcf/errors.hpp"

namespace windcf {

using nlohmann::json;

std::string to_string(CfMode m) {
    switch (m) {
        case CfMode::Operator: return "operator";
        case CfMode::Manufacturer: return "manufacturer";
        case CfMode::Revenue: return "revenue";
    }
    return "?";
}

CfMode cf_mode_from_string(const std::string& s) {
    if (s == "operator") return CfMode::Operator;
    if (s == "manufacturer") return CfMode::Manufacturer;
    if (s == "revenue") return CfMode::Revenue;
    throw DataError("unknown mode: " + s + " (expected operator|manufacturer|revenue)");
}

void ControlLimits::validate() const {
    if (max_tt_change <= 0.0) throw DataError("max transformer-temperature change must be > 0");
    if (beta < 0.0 || beta >= 1.0) throw DataError("beta must be in [0, 1)");
    if (coupling_tol < 0.0) throw DataError("coupling tolerance must be >= 0");
}

void RevenueConfig::validate() const {
    if (pi < 0.0) throw DataError("pi must be >= 0");
}

double distance_objective(const FeatureVector& x_star, const FeatureVector& x,
                          const SchemaAssets& assets) {
    double v = 0.0;
    for (int f : assets.schema.controllable) {
        const double mean = assets.scales.mean[static_cast<size_t>(f)];
        const double d = x_star[f] - x[f];
        v += d * d / (mean * mean);
    }
    return v;
}

namespace {

struct Box {
    double lo, hi;
    void clamp_to_integers() {
        lo = std::ceil(lo - 1e-9);
        hi = std::floor(hi + 1e-9);
    }
    bool empty() const { return lo > hi; }
    std::pair<double, double> pair() const { return {lo, hi}; }
};

// The multiplicative +/-beta band around an output range, widened by the
// coupling tolerance. Handles negative outputs conservatively.
Box band_around(const std::pair<double, double>& range, double beta, double tol) {
    const double cands[4] = {(1.0 - beta) * range.first, (1.0 + beta) * range.first,
                             (1.0 - beta) * range.second, (1.0 + beta) * range.second};
    const double lo = *std::min_element(cands, cands + 4) - tol;
    const double hi = *std::max_element(cands, cands + 4) + tol;
    return Box{lo, hi};
}

CounterfactualProblem build_problem(const FeatureVector& x_star, const CfModels& models,
                                    const SchemaAssets& assets, const ControlLimits& limits,
                                    double beta) {
    limits.validate();
    x_star.validate();
    if (!models.classifier || !models.n || !models.t) {
        throw DataError("counterfactual: classifier and both regressors are required");
    }
    const auto& schema = assets.schema;
    CounterfactualProblem built;
    built.epsilon = models.classifier->epsilon;
    built.p_max_value = assets.curve.p_max(x_star[F_WS]);

    // Controllable boxes; the TT step limit folds into the TT box.
    Box pbox{0.0, built.p_max_value};
    Box tnbox{assets.bounds.lower[F_TN], assets.bounds.upper[F_TN]};
    Box ttbox{std::max(assets.bounds.lower[F_TT], x_star[F_TT] - limits.max_tt_change),
              std::min(assets.bounds.upper[F_TT], x_star[F_TT] + limits.max_tt_change)};
    pbox.clamp_to_integers();
    tnbox.clamp_to_integers();
    ttbox.clamp_to_integers();

    // Tighten the temperature boxes through the surrogate coupling: each
    // temperature must lie in the band around its regressor's reachable
    // range, which itself shrinks as the boxes shrink.
    auto regressor_intervals = [&](const TreeEnsembleRegressor& reg) {
        std::vector<std::pair<double, double>> iv;
        iv.reserve(reg.inputs.size());
        for (const auto& name : reg.inputs) {
            if (name == schema.names[F_P]) iv.push_back(pbox.pair());
            else if (name == schema.names[F_TN]) iv.push_back(tnbox.pair());
            else if (name == schema.names[F_TT]) iv.push_back(ttbox.pair());
            else {
                const double v = x_star[schema.index_of(name)];
                iv.emplace_back(v, v);
            }
        }
        return iv;
    };
    for (int pass = 0; pass < 3; ++pass) {
        if (pbox.empty() || tnbox.empty() || ttbox.empty()) break;
        const auto n_range = tree_ensemble_range(*models.n, regressor_intervals(*models.n));
        const auto t_range = tree_ensemble_range(*models.t, regressor_intervals(*models.t));
        const Box n_band = band_around(n_range, beta, limits.coupling_tol);
        const Box t_band = band_around(t_range, beta, limits.coupling_tol);
        tnbox.lo = std::max(tnbox.lo, n_band.lo);
        tnbox.hi = std::min(tnbox.hi, n_band.hi);
        ttbox.lo = std::max(ttbox.lo, t_band.lo);
        ttbox.hi = std::min(ttbox.hi, t_band.hi);
        tnbox.clamp_to_integers();
        ttbox.clamp_to_integers();
    }
    if (pbox.empty() || tnbox.empty() || ttbox.empty()) {
        built.trivially_infeasible = true;
        return built;
    }

    MiqpProblem& prob = built.problem;
    built.x_p = prob.add_variable("P", pbox.lo, pbox.hi, VarType::Integer);
    built.x_tn = prob.add_variable("TN", tnbox.lo, tnbox.hi, VarType::Integer);
    built.x_tt = prob.add_variable("TT", ttbox.lo, ttbox.hi, VarType::Integer);

    auto input_for = [&](const std::string& name) -> ModelInput {
        if (name == "PMAX") return ModelInput::constant(built.p_max_value);
        const int f = schema.index_of(name);
        if (f == F_P) return ModelInput::variable(built.x_p);
        if (f == F_TN) return ModelInput::variable(built.x_tn);
        if (f == F_TT) return ModelInput::variable(built.x_tt);
        return ModelInput::constant(x_star[f]);
    };

    // Classifier block and margin.
    std::vector<ModelInput> cls_inputs;
    for (const auto& nm : models.classifier->inputs) cls_inputs.push_back(input_for(nm));
    built.score_var = encode_mlp(*models.classifier, cls_inputs, prob, "f");
    {
        LinearConstraint margin;
        margin.name = "score_margin";
        margin.terms.push_back(LinearTerm{built.score_var, 1.0});
        margin.sense = ConstraintSense::LessEqual;
        margin.rhs = models.classifier->threshold - built.epsilon;
        prob.add_constraint(std::move(margin));
    }

    // Surrogate blocks and the temperature coupling bands.
    std::vector<ModelInput> n_inputs, t_inputs;
    for (const auto& nm : models.n->inputs) n_inputs.push_back(input_for(nm));
    for (const auto& nm : models.t->inputs) t_inputs.push_back(input_for(nm));
    built.n_out = encode_tree_ensemble(*models.n, n_inputs, prob, 1e-6, "n");
    built.t_out = encode_tree_ensemble(*models.t, t_inputs, prob, 1e-6, "t");

    auto couple = [&](int temp_var, int out_var, const std::string& tag) {
        LinearConstraint up;  // x <= (1+beta)*out + tol
        up.name = tag + "_band_hi";
        up.terms.push_back(LinearTerm{temp_var, 1.0});
        up.terms.push_back(LinearTerm{out_var, -(1.0 + beta)});
        up.sense = ConstraintSense::LessEqual;
        up.rhs = limits.coupling_tol;
        prob.add_constraint(std::move(up));
        LinearConstraint dn;  // x >= (1-beta)*out - tol
        dn.name = tag + "_band_lo";
        dn.terms.push_back(LinearTerm{temp_var, 1.0});
        dn.terms.push_back(LinearTerm{out_var, -(1.0 - beta)});
        dn.sense = ConstraintSense::GreaterEqual;
        dn.rhs = -limits.coupling_tol;
        prob.add_constraint(std::move(dn));
    };
    couple(built.x_tn, built.n_out, "tn");
    couple(built.x_tt, built.t_out, "tt");

    // Normalized squared-distance objective over the controllables.
    for (int f : {F_P, F_TN, F_TT}) {
        const double mean = assets.scales.mean[static_cast<size_t>(f)];
        if (mean <= 0.0) throw DataError("counterfactual: non-positive normalization mean");
        const int var = f == F_P ? built.x_p : (f == F_TN ? built.x_tn : built.x_tt);
        prob.add_quadratic_objective_term(var, 1.0 / (mean * mean), x_star[f]);
    }
    return built;
}

}  // namespace

CounterfactualProblem build_operator_problem(const FeatureVector& x_star, const CfModels& models,
                                             const SchemaAssets& assets,
                                             const ControlLimits& limits) {
    return build_problem(x_star, models, assets, limits, /*beta=*/0.0);
}

CounterfactualProblem build_manufacturer_problem(const FeatureVector& x_star,
                                                 const CfModels& models,
                                                 const SchemaAssets& assets,
                                                 const ControlLimits& limits) {
    return build_problem(x_star, models, assets, limits, limits.beta);
}

ValidityReport check_counterfactual(const FeatureVector& x_star, const FeatureVector& x,
                                    const CfModels& models, const SchemaAssets& assets,
                                    CfMode mode, const ControlLimits& limits, double tol) {
    ValidityReport rep;
    double worst = 0.0;
    std::string worst_name = "none";
    auto track = [&](const std::string& name, double violation) {
        if (violation > worst) {
            worst = violation;
            worst_name = name;
        }
    };
    const auto& schema = assets.schema;
    // Classifier margin.
    const auto cls_in = model_inputs(models.classifier->inputs, x, schema, assets.curve);
    const double s = score(*models.classifier, cls_in);
    track("score_margin", s - (models.classifier->threshold - models.classifier->epsilon));
    // Surrogate coupling.
    const double beta = mode == CfMode::Manufacturer ? limits.beta : 0.0;
    const double n_pred =
        predict(*models.n, model_inputs(models.n->inputs, x, schema, assets.curve));
    const double t_pred =
        predict(*models.t, model_inputs(models.t->inputs, x, schema, assets.curve));
    const Box n_band = band_around({n_pred, n_pred}, beta, limits.coupling_tol);
    const Box t_band = band_around({t_pred, t_pred}, beta, limits.coupling_tol);
    track("tn_band", std::max(n_band.lo - x[F_TN], x[F_TN] - n_band.hi));
    track("tt_band", std::max(t_band.lo - x[F_TT], x[F_TT] - t_band.hi));
    // Power-curve cap.
    const double pmax = assets.curve.p_max(x_star[F_WS]);
    track("power_lower", -x[F_P]);
    track("power_cap", x[F_P] - pmax);
    // Data boxes for the temperatures.
    track("tn_bounds", std::max(assets.bounds.lower[F_TN] - x[F_TN],
                                x[F_TN] - assets.bounds.upper[F_TN]));
    track("tt_bounds", std::max(assets.bounds.lower[F_TT] - x[F_TT],
                                x[F_TT] - assets.bounds.upper[F_TT]));
    // Fixed features pinned.
    for (int f : schema.fixed) track("fixed_" + schema.names[static_cast<size_t>(f)],
                                     std::abs(x[f] - x_star[f]));
    // Integrality of the controllables.
    for (int f : schema.controllable) {
        track("integral_" + schema.names[static_cast<size_t>(f)],
              std::abs(x[f] - std::round(x[f])));
    }
    // Transformer-temperature step limit.
    track("max_tt_change", std::abs(x[F_TT] - x_star[F_TT]) - limits.max_tt_change);

    rep.max_violation = worst;
    rep.worst = worst_name;
    rep.ok = worst <= tol;
    return rep;
}

namespace {

CounterfactualResult run_mode(const FeatureVector& x_star, const CfModels& models,
                              const SchemaAssets& assets, CfMode mode,
                              const ControlLimits& limits, const SolveConfig& cfg,
                              const CounterfactualProblem* prebuilt,
                              const RevenueConfig* rev, double stage1_p) {
    CounterfactualResult out;
    out.counterfactual = x_star;
    CounterfactualProblem local;
    const CounterfactualProblem* built = prebuilt;
    if (!built) {
        local = mode == CfMode::Manufacturer
                    ? build_manufacturer_problem(x_star, models, assets, limits)
                    : build_operator_problem(x_star, models, assets, limits);
        built = &local;
    }
    if (built->trivially_infeasible) {
        out.status = SolveStatus::Infeasible;
        out.note = "empty controllable box after bound tightening";
        return out;
    }
    MiqpProblem prob = built->problem;  // copy: the revenue stage mutates it
    if (rev) {
        // Stage 2: maximize r * x_P (minimize the negation) under the same
        // constraints plus the deviation budget around the stage-1 power.
        MiqpProblem stage2;
        for (const auto& v : prob.variables()) stage2.add_variable(v.name, v.lower, v.upper, v.type);
        for (const auto& c : prob.constraints()) stage2.add_constraint(c);
        stage2.add_linear_objective_term(built->x_p, -rev->price);
        LinearConstraint budget;
        budget.name = "revenue_budget";
        budget.terms.push_back(LinearTerm{built->x_p, 1.0});
        budget.sense = ConstraintSense::LessEqual;
        budget.rhs = (1.0 + rev->pi) * stage1_p;
        stage2.add_constraint(std::move(budget));
        prob = std::move(stage2);
    }
    const SolveResult sr = solve(prob, cfg);
    out.status = sr.status;
    out.gap = sr.gap;
    out.solve_time_sec = sr.wall_time_sec;
    out.nodes = sr.node_count;
    if (!sr.has_incumbent) {
        if (out.status == SolveStatus::Optimal) out.status = SolveStatus::Infeasible;
        return out;
    }
    out.has_solution = true;
    FeatureVector x = x_star;
    x[F_P] = std::round(sr.x[static_cast<size_t>(built->x_p)]);
    x[F_TN] = std::round(sr.x[static_cast<size_t>(built->x_tn)]);
    x[F_TT] = std::round(sr.x[static_cast<size_t>(built->x_tt)]);
    out.counterfactual = x;
    for (int f = 0; f < kNumFeatures; ++f) out.delta[static_cast<size_t>(f)] = x[f] - x_star[f];
    out.objective = distance_objective(x_star, x, assets);
    out.achieved_score = score(*models.classifier,
                               model_inputs(models.classifier->inputs, x, assets.schema,
                                            assets.curve));
    out.n_prediction =
        predict(*models.n, model_inputs(models.n->inputs, x, assets.schema, assets.curve));
    out.t_prediction =
        predict(*models.t, model_inputs(models.t->inputs, x, assets.schema, assets.curve));
    const ValidityReport rep = check_counterfactual(
        x_star, x, models, assets, mode == CfMode::Revenue ? CfMode::Operator : mode, limits);
    out.max_violation = rep.max_violation;
    out.valid = rep.ok;
    if (!rep.ok) out.note = "re-check violation at " + rep.worst;
    return out;
}

}  // namespace

CounterfactualResult solve_counterfactual(const FeatureVector& x_star, const CfModels& models,
                                          const SchemaAssets& assets, CfMode mode,
                                          const ControlLimits& limits, const SolveConfig& cfg) {
    if (mode == CfMode::Revenue) {
        throw DataError("use solve_revenue_driven for revenue mode");
    }
    return run_mode(x_star, models, assets, mode, limits, cfg, nullptr, nullptr, 0.0);
}

RevenueResult solve_revenue_driven(const FeatureVector& x_star, const CfModels& models,
                                   const SchemaAssets& assets, const ControlLimits& limits,
                                   const RevenueConfig& rev, const SolveConfig& cfg) {
    rev.validate();
    RevenueResult out;
    const CounterfactualProblem built = build_operator_problem(x_star, models, assets, limits);
    out.stage1 = run_mode(x_star, models, assets, CfMode::Operator, limits, cfg, &built,
                          nullptr, 0.0);
    if (!out.stage1.has_solution) {
        out.stage2 = out.stage1;  // Infeasible propagates; harness applies the fallback
        return out;
    }
    out.stage2 = run_mode(x_star, models, assets, CfMode::Revenue, limits, cfg, &built, &rev,
                          out.stage1.counterfactual[F_P]);
    if (out.stage2.has_solution) {
        out.revenue_objective = rev.price * out.stage2.counterfactual[F_P];
    }
    return out;
}

std::string CounterfactualResult::to_json() const {
    json j;
    j["status"] = ::windcf::to_string(status);
    j["has_solution"] = has_solution;
    j["objective"] = objective;
    j["gap"] = std::isfinite(gap) ? gap : -1.0;
    j["solve_time_sec"] = solve_time_sec;
    j["nodes"] = nodes;
    j["valid"] = valid;
    j["max_violation"] = max_violation;
    if (!note.empty()) j["note"] = note;
    if (has_solution) {
        const auto schema = FeatureSchema::standard();
        json x = json::object(), d = json::object();
        for (int f = 0; f < kNumFeatures; ++f) {
            x[schema.names[static_cast<size_t>(f)]] = counterfactual[f];
            d[schema.names[static_cast<size_t>(f)]] = delta[static_cast<size_t>(f)];
        }
        j["counterfactual"] = x;
        j["delta"] = d;
        j["score"] = achieved_score;
        j["n_prediction"] = n_prediction;
        j["t_prediction"] = t_prediction;
    }
    return j.dump(2) + "\n";
}

} // namespace windcf
