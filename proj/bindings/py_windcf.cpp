// Python bindings for the counterfactual control engine. Structured results
// cross the boundary as JSON strings; the windcf package decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "windcf/counterfactual.hpp"
#include "windcf/errors.hpp"
#include "windcf/harness.hpp"
#include "windcf/predictors.hpp"
#include "windcf/schema.hpp"
#include "windcf/solver.hpp"
#include "windcf/synth.hpp"
#include "windcf/train.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace windcf;

namespace {

json opts_json(const std::string& text) {
    if (text.empty()) return json::object();
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad options JSON: ") + e.what());
    }
}

SolveConfig solve_config_from(const json& o) {
    SolveConfig cfg;
    if (o.contains("time_limit")) cfg.time_limit_sec = o["time_limit"].get<double>();
    if (o.contains("gap")) cfg.gap_target = o["gap"].get<double>();
    return cfg;
}

ControlLimits limits_from(const json& o) {
    ControlLimits limits;
    if (o.contains("mdt")) limits.max_tt_change = o["mdt"].get<double>();
    if (o.contains("beta")) limits.beta = o["beta"].get<double>();
    if (o.contains("coupling_tol")) limits.coupling_tol = o["coupling_tol"].get<double>();
    limits.validate();
    return limits;
}

// The trained models plus assets, with the main operations on top.
class Engine {
public:
    Engine(const std::string& assets_path, const std::string& model_path,
           const std::string& n_path, const std::string& t_path)
        : assets_(SchemaAssets::load(assets_path)),
          classifier_(MlpClassifier::load(model_path)),
          n_(TreeEnsembleRegressor::load(n_path)),
          t_(TreeEnsembleRegressor::load(t_path)) {}

    double p_max(double ws) const { return assets_.curve.p_max(ws); }

    double score_row(const std::string& row_json) const {
        const FeatureVector fv = feature_vector_from_json(row_json);
        return score(classifier_,
                     model_inputs(classifier_.inputs, fv, assets_.schema, assets_.curve));
    }

    int classify_row(const std::string& row_json) const {
        const FeatureVector fv = feature_vector_from_json(row_json);
        return classify(classifier_,
                        model_inputs(classifier_.inputs, fv, assets_.schema, assets_.curve));
    }

    double predict_n(const std::string& row_json) const {
        const FeatureVector fv = feature_vector_from_json(row_json);
        return predict(n_, model_inputs(n_.inputs, fv, assets_.schema, assets_.curve));
    }

    double predict_t(const std::string& row_json) const {
        const FeatureVector fv = feature_vector_from_json(row_json);
        return predict(t_, model_inputs(t_.inputs, fv, assets_.schema, assets_.curve));
    }

    std::string explain(const std::string& row_json, const std::string& mode,
                        const std::string& options) {
        const json o = opts_json(options);
        MlpClassifier classifier = classifier_;  // per-call margin override
        if (o.contains("epsilon")) classifier.epsilon = o["epsilon"].get<double>();
        const CfModels models{&classifier, &n_, &t_};
        const FeatureVector x_star = feature_vector_from_json(row_json);
        const ControlLimits limits = limits_from(o);
        const SolveConfig cfg = solve_config_from(o);
        const CfMode m = cf_mode_from_string(mode);
        if (m == CfMode::Revenue) {
            RevenueConfig rev;
            if (o.contains("price")) rev.price = o["price"].get<double>();
            if (o.contains("pi")) rev.pi = o["pi"].get<double>();
            const RevenueResult rr =
                solve_revenue_driven(x_star, models, assets_, limits, rev, cfg);
            json j;
            j["stage1"] = json::parse(rr.stage1.to_json());
            j["stage2"] = json::parse(rr.stage2.to_json());
            j["revenue_objective"] = rr.revenue_objective;
            return j.dump();
        }
        const CounterfactualResult r =
            solve_counterfactual(x_star, models, assets_, m, limits, cfg);
        return r.to_json();
    }

    std::string simulate(const std::string& data_csv, const std::string& from,
                         const std::string& to, const std::string& mode,
                         const std::string& options, const std::string& out_dir) {
        const json o = opts_json(options);
        MlpClassifier classifier = classifier_;
        if (o.contains("epsilon")) classifier.epsilon = o["epsilon"].get<double>();
        const CfModels models{&classifier, &n_, &t_};
        const auto data = read_csv(data_csv);
        ReplayConfig cfg;
        cfg.mode = cf_mode_from_string(mode);
        cfg.limits = limits_from(o);
        if (o.contains("price")) cfg.revenue.price = o["price"].get<double>();
        if (o.contains("pi")) cfg.revenue.pi = o["pi"].get<double>();
        if (o.contains("jobs")) cfg.jobs = o["jobs"].get<int>();
        if (o.contains("cadence")) cfg.cadence_sec = o["cadence"].get<int>();
        cfg.solve = solve_config_from(o);
        std::int64_t to_ts = unix_from_iso8601(to);
        if (to.find('T') == std::string::npos) to_ts += 86400 - cfg.cadence_sec;
        const ReplayReport rep =
            replay(data, unix_from_iso8601(from), to_ts, models, assets_, cfg);
        if (!out_dir.empty()) write_report(rep, out_dir);
        return rep.summary_json();
    }

private:
    SchemaAssets assets_;
    MlpClassifier classifier_;
    TreeEnsembleRegressor n_, t_;
};

std::string py_generate(const std::string& spec_json, const std::string& out_csv,
                        const std::string& truth_out) {
    GeneratorSpec spec;
    if (!spec_json.empty()) spec = GeneratorSpec::from_json(spec_json);
    const SynthResult result = generate(spec);
    write_csv(out_csv, result.samples);
    if (!truth_out.empty()) {
        std::ofstream f(truth_out, std::ios::binary);
        if (!f) throw DataError("cannot write " + truth_out);
        f << result.truth.to_json();
    }
    long anomalies = 0;
    for (const auto& s : result.samples) anomalies += s.label.value_or(0);
    json j;
    j["samples"] = result.samples.size();
    j["anomalies"] = anomalies;
    j["out"] = out_csv;
    return j.dump();
}

std::string py_train(const std::string& data_csv, const std::string& out_dir,
                     const std::string& options) {
    const json o = opts_json(options);
    PipelineOptions opts;
    if (o.contains("q")) opts.q = o["q"].get<double>();
    if (o.contains("ratio")) opts.ratio = o["ratio"].get<double>();
    if (o.contains("k")) opts.k = o["k"].get<int>();
    if (o.contains("seed")) opts.seed = o["seed"].get<std::uint64_t>();
    if (o.contains("trees")) opts.trees = o["trees"].get<int>();
    if (o.contains("depth")) opts.depth = o["depth"].get<int>();
    if (o.contains("scales_on_train")) opts.scales_on_train = o["scales_on_train"].get<bool>();
    const auto dataset = read_csv(data_csv);
    const TrainedBundle bundle = run_training(dataset, opts);
    std::filesystem::create_directories(out_dir);
    bundle.classifier.save(out_dir + "/model.json");
    bundle.n.save(out_dir + "/n.json");
    bundle.t.save(out_dir + "/t.json");
    bundle.assets.save(out_dir + "/assets.json");
    json j = json::parse(bundle.report.to_json());
    j["n_holdout_rmse"] = bundle.n_rmse;
    j["t_holdout_rmse"] = bundle.t_rmse;
    j["epsilon"] = bundle.classifier.epsilon;
    j["out_dir"] = out_dir;
    return j.dump();
}

double py_p_max(double ws) { return default_power_curve().p_max(ws); }

}  // namespace

PYBIND11_MODULE(_windcf, m) {
    m.doc() = "Counterfactual control engine for a wind-turbine transformer";
    m.attr("__version__") = "0.1.0";

    py::register_exception<DataError>(m, "DataError");
    py::register_exception<SolverError>(m, "SolverFailure");

    m.def("p_max", &py_p_max, py::arg("ws"),
          "Maximum power (kW) of the built-in synthetic curve at a wind speed");
    m.def("generate", &py_generate, py::arg("spec_json") = std::string(), py::arg("out_csv"),
          py::arg("truth_out") = std::string(),
          "Generate a synthetic SCADA series; returns a JSON summary string");
    m.def("train", &py_train, py::arg("data_csv"), py::arg("out_dir"),
          py::arg("options") = std::string(),
          "Train classifier + surrogates from a CSV; returns the report JSON");

    py::class_<Engine>(m, "Engine")
        .def(py::init<const std::string&, const std::string&, const std::string&,
                      const std::string&>(),
             py::arg("assets"), py::arg("model"), py::arg("n"), py::arg("t"))
        .def("p_max", &Engine::p_max, py::arg("ws"))
        .def("score", &Engine::score_row, py::arg("row_json"))
        .def("classify", &Engine::classify_row, py::arg("row_json"))
        .def("predict_n", &Engine::predict_n, py::arg("row_json"))
        .def("predict_t", &Engine::predict_t, py::arg("row_json"))
        .def("explain", &Engine::explain, py::arg("row_json"),
             py::arg("mode") = std::string("operator"), py::arg("options") = std::string())
        .def("simulate", &Engine::simulate, py::arg("data_csv"), py::arg("from_ts"),
             py::arg("to_ts"), py::arg("mode") = std::string("operator"),
             py::arg("options") = std::string(), py::arg("out_dir") = std::string());
}
