// windcf: anomaly-aware counterfactual control for a wind-turbine
// transformer. Subcommands: generate, train, explain, simulate, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "windcf/counterfactual.hpp"
#include "windcf/errors.hpp"
#include "windcf/harness.hpp"
#include "windcf/predictors.hpp"
#include "windcf/schema.hpp"
#include "windcf/solver.hpp"
#include "windcf/synth.hpp"
#include "windcf/train.hpp"

using nlohmann::json;
using namespace windcf;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 ok, 1 usage, 2 data/model error, 3 solver failure.
enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kSolverFailure = 3 };

void log_line(const std::string& msg) { std::cerr << "[windcf] " << msg << "\n"; }

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Config-file defaults: {"<subcommand>": {"<long-flag>": value}}; explicit
// command-line flags win.
void apply_config_defaults(CLI::App& app, const std::string& path) {
    json cfg;
    try {
        cfg = json::parse(slurp(path));
    } catch (const json::exception& e) {
        throw DataError(std::string("bad config JSON: ") + e.what());
    }
    for (CLI::App* sub : app.get_subcommands({})) {
        if (!cfg.contains(sub->get_name())) continue;
        const json& section = cfg[sub->get_name()];
        for (const auto& [key, value] : section.items()) {
            CLI::Option* opt = sub->get_option_no_throw("--" + key);
            if (!opt) throw DataError("config: unknown option '" + key + "' for " + sub->get_name());
            const std::string text =
                value.is_string() ? value.get<std::string>() : value.dump();
            opt->default_val(text);
        }
    }
}

struct SolveFlags {
    double time_limit = 900.0;
    double gap = 1e-4;
    bool verbose = false;

    SolveConfig to_config(std::ostream* log_stream) const {
        SolveConfig cfg;
        cfg.time_limit_sec = time_limit;
        cfg.gap_target = gap;
        cfg.node_log = verbose ? log_stream : nullptr;
        return cfg;
    }
};

void add_solve_flags(CLI::App* sub, SolveFlags& flags) {
    sub->add_option("--time-limit", flags.time_limit, "Solver time limit per instance, seconds")
        ->capture_default_str();
    sub->add_option("--gap", flags.gap, "Relative MIP gap target")->capture_default_str();
    sub->add_flag("--verbose", flags.verbose, "Stream solver node events to stderr");
}

int run_generate(const std::string& spec_path, std::uint64_t seed_override, bool has_seed,
                 const std::string& out, const std::string& truth_out, bool as_json) {
    GeneratorSpec spec;
    if (!spec_path.empty()) spec = GeneratorSpec::load(spec_path);
    if (has_seed) spec.seed = seed_override;
    const SynthResult result = generate(spec);
    write_csv(out, result.samples);
    const std::string truth_path = truth_out.empty() ? out + ".truth.json" : truth_out;
    std::ofstream truth(truth_path, std::ios::binary);
    if (!truth) throw DataError("cannot write " + truth_path);
    truth << result.truth.to_json();
    long anomalies = 0;
    for (const auto& s : result.samples) anomalies += s.label.value_or(0);
    if (as_json) {
        json j;
        j["samples"] = result.samples.size();
        j["anomalies"] = anomalies;
        j["out"] = out;
        j["ground_truth"] = truth_path;
        std::cout << j.dump(2) << "\n";
    } else {
        log_line("wrote " + std::to_string(result.samples.size()) + " samples (" +
                 std::to_string(anomalies) + " anomalous) to " + out);
    }
    return kOk;
}

struct TrainFlags {
    std::string data, out;
    std::string out_n, out_t, out_assets;
    std::string scales_on = "full";
    std::string curve_path;
    double q = 0.70;
    double ratio = 1.0;
    int k = 5;
    std::uint64_t seed = 1;
    int trees = 25;
    int depth = 3;
};

int run_train(const TrainFlags& f, bool as_json) {
    const auto dataset = read_csv(f.data);
    PipelineOptions opts;
    opts.q = f.q;
    opts.ratio = f.ratio;
    opts.k = f.k;
    opts.seed = f.seed;
    opts.trees = f.trees;
    opts.depth = f.depth;
    opts.scales_on_train = f.scales_on == "train";
    if (!f.curve_path.empty()) {
        const json j = json::parse(slurp(f.curve_path));
        std::vector<std::pair<double, double>> knots;
        for (const auto& k : j.at("power_curve").at("knots")) {
            knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
        }
        opts.curve = PowerCurve(std::move(knots));
    }
    const TrainedBundle bundle = run_training(dataset, opts);
    log_line("split cutoff " + iso8601_from_unix(bundle.cutoff));
    if (!bundle.notes.empty()) log_line(bundle.notes);

    const std::filesystem::path out_path(f.out);
    const std::filesystem::path dir = out_path.parent_path();
    auto sibling = [&](const std::string& given, const char* name) {
        return given.empty() ? (dir / name).string() : given;
    };
    bundle.classifier.save(f.out);
    bundle.n.save(sibling(f.out_n, "n.json"));
    bundle.t.save(sibling(f.out_t, "t.json"));
    bundle.assets.save(sibling(f.out_assets, "assets.json"));

    json j = json::parse(bundle.report.to_json());
    j["n_holdout_rmse"] = bundle.n_rmse;
    j["t_holdout_rmse"] = bundle.t_rmse;
    j["epsilon"] = bundle.classifier.epsilon;
    j["model"] = f.out;
    std::cout << j.dump(2) << "\n";
    (void)as_json;  // the train report is always JSON
    return kOk;
}

struct ExplainFlags {
    std::string assets, model, n, t, instance;
    std::string mode = "operator";
    double epsilon = -1.0;  // <0: use the model's stored margin
    double mdt = 30.0;
    double beta = 0.10;
    double pi = 0.10;
    double price = 100.0;
    std::string dump_lp;
    SolveFlags solve;
};

int run_explain(const ExplainFlags& f) {
    const SchemaAssets assets = SchemaAssets::load(f.assets);
    MlpClassifier classifier = MlpClassifier::load(f.model);
    const TreeEnsembleRegressor n = TreeEnsembleRegressor::load(f.n);
    const TreeEnsembleRegressor t = TreeEnsembleRegressor::load(f.t);
    const FeatureVector x_star = feature_vector_from_json(slurp(f.instance));
    if (f.epsilon >= 0.0) classifier.epsilon = f.epsilon;
    const CfMode mode = cf_mode_from_string(f.mode);
    ControlLimits limits;
    limits.max_tt_change = f.mdt;
    limits.beta = f.beta;
    limits.validate();
    const CfModels models{&classifier, &n, &t};

    const int cls = classify(classifier,
                             model_inputs(classifier.inputs, x_star, assets.schema, assets.curve));
    if (cls == 0) {
        // Already healthy: the identity counterfactual.
        CounterfactualResult id;
        id.status = SolveStatus::Optimal;
        id.has_solution = true;
        id.counterfactual = x_star;
        id.objective = 0.0;
        id.achieved_score = score(classifier, model_inputs(classifier.inputs, x_star,
                                                           assets.schema, assets.curve));
        id.valid = true;
        id.note = "instance already classified good";
        log_line("instance already classified good");
        std::cout << id.to_json();
        return kOk;
    }

    if (!f.dump_lp.empty()) {
        const CounterfactualProblem built =
            mode == CfMode::Manufacturer
                ? build_manufacturer_problem(x_star, models, assets, limits)
                : build_operator_problem(x_star, models, assets, limits);
        std::ofstream lp(f.dump_lp);
        if (!lp) throw DataError("cannot write " + f.dump_lp);
        if (built.trivially_infeasible) {
            lp << "\\ trivially infeasible: empty controllable box\n";
        } else {
            lp << built.problem.to_lp_format();
        }
        log_line("wrote LP dump to " + f.dump_lp);
    }

    const SolveConfig solve_cfg = f.solve.to_config(&std::cerr);
    if (mode == CfMode::Revenue) {
        RevenueConfig rev;
        rev.price = f.price;
        rev.pi = f.pi;
        const RevenueResult rr = solve_revenue_driven(x_star, models, assets, limits, rev,
                                                      solve_cfg);
        json j;
        j["stage1"] = json::parse(rr.stage1.to_json());
        j["stage2"] = json::parse(rr.stage2.to_json());
        j["revenue_objective"] = rr.revenue_objective;
        std::cout << j.dump(2) << "\n";
        return kOk;
    }
    const CounterfactualResult r =
        solve_counterfactual(x_star, models, assets, mode, limits, solve_cfg);
    std::cout << r.to_json();
    return kOk;
}

struct SimulateFlags {
    std::string data, assets, model, n, t, out;
    std::string from, to;
    std::string mode = "operator";
    double price = 100.0;
    double epsilon = -1.0;
    double mdt = 30.0;
    double beta = 0.10;
    double pi = 0.10;
    int jobs = 1;
    int cadence = 600;
    SolveFlags solve;
};

int run_simulate(const SimulateFlags& f, bool as_json) {
    const SchemaAssets assets = SchemaAssets::load(f.assets);
    MlpClassifier classifier = MlpClassifier::load(f.model);
    const TreeEnsembleRegressor n = TreeEnsembleRegressor::load(f.n);
    const TreeEnsembleRegressor t = TreeEnsembleRegressor::load(f.t);
    if (f.epsilon >= 0.0) classifier.epsilon = f.epsilon;
    const auto data = read_csv(f.data);
    ReplayConfig cfg;
    cfg.mode = cf_mode_from_string(f.mode);
    cfg.limits.max_tt_change = f.mdt;
    cfg.limits.beta = f.beta;
    cfg.limits.validate();
    cfg.revenue.price = f.price;
    cfg.revenue.pi = f.pi;
    cfg.solve = f.solve.to_config(&std::cerr);
    cfg.jobs = f.jobs;
    cfg.cadence_sec = f.cadence;
    const std::int64_t from = unix_from_iso8601(f.from);
    // A bare date as --to means "through the end of that day".
    std::int64_t to = unix_from_iso8601(f.to);
    if (f.to.find('T') == std::string::npos) to += 86400 - f.cadence;
    const CfModels models{&classifier, &n, &t};
    const ReplayReport rep = replay(data, from, to, models, assets, cfg);
    write_report(rep, f.out);
    if (as_json) {
        std::cout << rep.summary_json();
    } else {
        log_line("replayed " + std::to_string(rep.replayed) + " slots: " +
                 std::to_string(rep.already_good) + " good, " + std::to_string(rep.optimized) +
                 " optimized, " + std::to_string(rep.infeasible) + " infeasible, " +
                 std::to_string(rep.time_limited) + " time-limited; report in " + f.out);
    }
    return kOk;
}

int run_report(const std::string& timeline, double price, int cadence, const std::string& out,
               bool as_json) {
    const ReplayReport rep = summarize_timeline(timeline, price, cadence);
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream sm(out + "/summary.json", std::ios::binary);
        if (!sm) throw DataError("cannot write " + out + "/summary.json");
        sm << rep.summary_json();
    }
    if (as_json || out.empty()) std::cout << rep.summary_json();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"counterfactual control engine for a wind-turbine transformer"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable stdout for every subcommand");
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file with per-subcommand defaults");

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a synthetic SCADA series");
    std::string gen_spec, gen_out, gen_truth;
    std::uint64_t gen_seed = 0;
    gen->add_option("--spec", gen_spec, "Generator spec JSON (defaults when omitted)");
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Override the spec seed");
    gen->add_option("--out", gen_out, "Output CSV path")->required();
    gen->add_option("--truth-out", gen_truth, "Ground-truth JSON path (default <out>.truth.json)");

    // train
    auto* tr = app.add_subcommand("train", "Train the classifier and the temperature surrogates");
    TrainFlags tf;
    tr->add_option("--data", tf.data, "Input CSV")->required();
    tr->add_option("--q", tf.q, "Anomaly quantile for the temporal split")->capture_default_str();
    tr->add_option("--ratio", tf.ratio, "Fault-to-good undersampling ratio")->capture_default_str();
    tr->add_option("--k", tf.k, "Cross-validation folds")->capture_default_str();
    tr->add_option("--seed", tf.seed, "Training seed")->capture_default_str();
    tr->add_option("--out", tf.out, "Classifier output path")->required();
    tr->add_option("--out-n", tf.out_n, "Nacelle surrogate output (default n.json next to --out)");
    tr->add_option("--out-t", tf.out_t, "Transformer surrogate output (default t.json)");
    tr->add_option("--out-assets", tf.out_assets, "Assets config output (default assets.json)");
    tr->add_option("--scales-on", tf.scales_on, "Normalization means over 'full' or 'train' data")
        ->check(CLI::IsMember({"full", "train"}))
        ->capture_default_str();
    tr->add_option("--curve", tf.curve_path, "Power-curve JSON (default: built-in synthetic curve)");
    tr->add_option("--trees", tf.trees, "Boosted trees per surrogate")->capture_default_str();
    tr->add_option("--depth", tf.depth, "Max tree depth")->capture_default_str();

    // explain
    auto* ex = app.add_subcommand("explain", "Counterfactual for one flagged instance");
    ExplainFlags ef;
    ex->add_option("--assets", ef.assets, "Assets config JSON")->required();
    ex->add_option("--model", ef.model, "Classifier JSON")->required();
    ex->add_option("--n", ef.n, "Nacelle surrogate JSON")->required();
    ex->add_option("--t", ef.t, "Transformer surrogate JSON")->required();
    ex->add_option("--instance", ef.instance, "Instance row JSON")->required();
    ex->add_option("--mode", ef.mode, "operator|manufacturer|revenue")->capture_default_str();
    ex->add_option("--epsilon", ef.epsilon, "Score margin override (default: model value)");
    ex->add_option("--mdt", ef.mdt, "Max transformer-temperature change, deg C")
        ->capture_default_str();
    ex->add_option("--beta", ef.beta, "Manufacturer temperature slack")->capture_default_str();
    ex->add_option("--pi", ef.pi, "Revenue-stage power budget")->capture_default_str();
    ex->add_option("--price", ef.price, "Energy price, euro/MWh")->capture_default_str();
    ex->add_option("--dump-lp", ef.dump_lp, "Write the encoded problem in LP format");
    add_solve_flags(ex, ef.solve);

    // simulate
    auto* si = app.add_subcommand("simulate", "Replay a date range through the control loop");
    SimulateFlags sf;
    si->add_option("--data", sf.data, "Input CSV")->required();
    si->add_option("--assets", sf.assets, "Assets config JSON")->required();
    si->add_option("--model", sf.model, "Classifier JSON")->required();
    si->add_option("--n", sf.n, "Nacelle surrogate JSON")->required();
    si->add_option("--t", sf.t, "Transformer surrogate JSON")->required();
    si->add_option("--from", sf.from, "Range start (ISO date or datetime)")->required();
    si->add_option("--to", sf.to, "Range end, inclusive")->required();
    si->add_option("--mode", sf.mode, "operator|manufacturer|revenue")->capture_default_str();
    si->add_option("--price", sf.price, "Energy price, euro/MWh")->capture_default_str();
    si->add_option("--epsilon", sf.epsilon, "Score margin override");
    si->add_option("--mdt", sf.mdt, "Max transformer-temperature change")->capture_default_str();
    si->add_option("--beta", sf.beta, "Manufacturer temperature slack")->capture_default_str();
    si->add_option("--pi", sf.pi, "Revenue-stage power budget")->capture_default_str();
    si->add_option("--jobs", sf.jobs, "Solver worker threads")->capture_default_str();
    si->add_option("--cadence", sf.cadence, "Slot length in seconds")->capture_default_str();
    si->add_option("--out", sf.out, "Report directory")->required();
    add_solve_flags(si, sf.solve);

    // report
    auto* re = app.add_subcommand("report", "Re-derive a summary from a timeline.csv");
    std::string rep_timeline, rep_out;
    double rep_price = 100.0;
    int rep_cadence = 600;
    re->add_option("--timeline", rep_timeline, "timeline.csv path")->required();
    re->add_option("--price", rep_price, "Energy price, euro/MWh")->capture_default_str();
    re->add_option("--cadence", rep_cadence, "Slot length in seconds")->capture_default_str();
    re->add_option("--out", rep_out, "Directory for the re-derived summary.json");

    // Pre-scan for --config so its values become defaults before parsing.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_defaults(app, argv[i + 1]);
            } catch (const DataError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kDataError;
            }
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (gen->parsed()) {
            return run_generate(gen_spec, gen_seed, gen_seed_opt->count() > 0, gen_out, gen_truth,
                                as_json);
        }
        if (tr->parsed()) return run_train(tf, as_json);
        if (ex->parsed()) return run_explain(ef);
        if (si->parsed()) return run_simulate(sf, as_json);
        if (re->parsed()) return run_report(rep_timeline, rep_price, rep_cadence, rep_out, as_json);
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolverFailure;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kUsage;
}
