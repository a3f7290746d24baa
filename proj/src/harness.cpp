#include "windcf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "windcf/errors.hpp"

namespace windcf {

using nlohmann::json;

namespace {

double slot_hours(int cadence_sec) { return static_cast<double>(cadence_sec) / 3600.0; }

ReplayRecord solve_flagged(const FeatureVector& fv, const CfModels& models,
                           const SchemaAssets& assets, const ReplayConfig& cfg) {
    ReplayRecord rec;
    rec.timestamp = fv.timestamp;
    rec.hist_p = fv[F_P];
    rec.p_max = assets.curve.p_max(fv[F_WS]);
    if (cfg.mode == CfMode::Revenue) {
        const RevenueResult rr =
            solve_revenue_driven(fv, models, assets, cfg.limits, cfg.revenue, cfg.solve);
        if (!rr.stage1.has_solution) {
            rec.status = "infeasible";
            rec.cf_p = 0.0;
            rec.rev_p = 0.0;
            return rec;
        }
        rec.cf_p = rr.stage1.counterfactual[F_P];
        rec.objective = rr.stage1.objective;
        // Stage 1 is always feasible for stage 2, so a missing stage-2
        // incumbent degrades to the stage-1 power.
        rec.rev_p = rr.stage2.has_solution ? rr.stage2.counterfactual[F_P] : rec.cf_p;
        const SolveStatus st = rr.stage2.has_solution ? rr.stage2.status : rr.stage1.status;
        rec.gap = rr.stage2.has_solution ? rr.stage2.gap : rr.stage1.gap;
        rec.status = st == SolveStatus::FeasibleAtLimit ? "time_limited" : "optimized";
        return rec;
    }
    const CfMode mode = cfg.mode;
    const CounterfactualResult cr =
        solve_counterfactual(fv, models, assets, mode, cfg.limits, cfg.solve);
    if (!cr.has_solution) {
        rec.status = cr.status == SolveStatus::FeasibleAtLimit ? "time_limited" : "infeasible";
        rec.cf_p = 0.0;  // company fallback: shut production down
        rec.rev_p = 0.0;
        rec.gap = std::isfinite(cr.gap) ? cr.gap : 0.0;
        return rec;
    }
    rec.cf_p = cr.counterfactual[F_P];
    rec.rev_p = rec.cf_p;
    rec.gap = cr.gap;
    rec.objective = cr.objective;
    rec.status = cr.status == SolveStatus::FeasibleAtLimit ? "time_limited" : "optimized";
    return rec;
}

}  // namespace

ReplayReport replay(const std::vector<FeatureVector>& data, std::int64_t from, std::int64_t to,
                    const CfModels& models, const SchemaAssets& assets, const ReplayConfig& cfg) {
    if (from > to) throw DataError("replay: from > to");
    ReplayReport rep;
    rep.mode = to_string(cfg.mode);

    std::vector<const FeatureVector*> window;
    for (const auto& s : data) {
        if (s.timestamp >= from && s.timestamp <= to) window.push_back(&s);
    }
    rep.replayed = static_cast<long>(window.size());
    const long expected = (to - from) / cfg.cadence_sec + 1;
    rep.gaps = std::max(0L, expected - rep.replayed);

    // Classify everything first; flagged samples go to the solver pool.
    rep.records.resize(window.size());
    std::vector<size_t> flagged;
    for (size_t i = 0; i < window.size(); ++i) {
        const FeatureVector& fv = *window[i];
        ReplayRecord& rec = rep.records[i];
        rec.timestamp = fv.timestamp;
        rec.hist_p = fv[F_P];
        rec.p_max = assets.curve.p_max(fv[F_WS]);
        const int cls = classify(*models.classifier,
                                 model_inputs(models.classifier->inputs, fv, assets.schema,
                                              assets.curve));
        if (cls == 0) {
            rec.status = "good";
            rec.cf_p = rec.hist_p;
            rec.rev_p = rec.hist_p;
        } else {
            flagged.push_back(i);
        }
    }

    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1 || flagged.size() < 2) {
        for (size_t i : flagged) rep.records[i] = solve_flagged(*window[i], models, assets, cfg);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            while (true) {
                const size_t k = next.fetch_add(1);
                if (k >= flagged.size()) return;
                const size_t i = flagged[k];
                rep.records[i] = solve_flagged(*window[i], models, assets, cfg);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    const double hours = slot_hours(cfg.cadence_sec);
    const double price = cfg.revenue.price;
    for (const auto& rec : rep.records) {
        if (rec.status == "good") ++rep.already_good;
        else if (rec.status == "optimized") ++rep.optimized;
        else if (rec.status == "time_limited") ++rep.time_limited;
        else ++rep.infeasible;
        const double hist_mwh = rec.hist_p * hours / 1000.0;
        const double cf_mwh = rec.cf_p * hours / 1000.0;
        const double rev_mwh = rec.rev_p * hours / 1000.0;
        rep.energy_historical_mwh += hist_mwh;
        rep.energy_counterfactual_mwh += cf_mwh;
        rep.revenue_historical += hist_mwh * price;
        rep.revenue_counterfactual += cf_mwh * price;
        rep.revenue_revenue_driven += rev_mwh * price;
        rep.revenue_historical_with_shutdown += (rec.status == "good" ? hist_mwh : 0.0) * price;
    }
    return rep;
}

std::string ReplayReport::summary_json() const {
    json j;
    j["mode"] = mode;
    j["counts"] = {{"already_good", already_good},
                   {"optimized", optimized},
                   {"infeasible", infeasible},
                   {"time_limited", time_limited}};
    j["replayed"] = replayed;
    j["gaps"] = gaps;
    j["revenue_eur"] = {{"historical", revenue_historical},
                        {"counterfactual", revenue_counterfactual},
                        {"revenue_driven", revenue_revenue_driven},
                        {"historical_with_shutdown", revenue_historical_with_shutdown}};
    j["energy_mwh"] = {{"historical", energy_historical_mwh},
                       {"counterfactual", energy_counterfactual_mwh}};
    return j.dump(2) + "\n";
}

void write_report(const ReplayReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string tl_path = out_dir + "/timeline.csv";
    std::ofstream tl(tl_path, std::ios::binary);
    if (!tl) throw DataError("cannot write " + tl_path);
    tl << "timestamp,hist_p,cf_p,rev_p,p_max,status,gap\n";
    char buf[256];
    for (const auto& r : report.records) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%s,%.10g\n",
                      iso8601_from_unix(r.timestamp).c_str(), r.hist_p, r.cf_p, r.rev_p, r.p_max,
                      r.status.c_str(), r.gap);
        tl << buf;
    }
    tl.close();
    const std::string sm_path = out_dir + "/summary.json";
    std::ofstream sm(sm_path, std::ios::binary);
    if (!sm) throw DataError("cannot write " + sm_path);
    sm << report.summary_json();
}

ReplayReport summarize_timeline(const std::string& timeline_path, double price,
                                int cadence_sec) {
    std::ifstream f(timeline_path);
    if (!f) throw DataError("cannot open " + timeline_path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("timestamp,hist_p,cf_p,rev_p,p_max,status", 0) != 0) {
        throw DataError(timeline_path + ": unexpected timeline header");
    }
    ReplayReport rep;
    rep.mode = "from_timeline";
    const double hours = slot_hours(cadence_sec);
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 6) {
            throw DataError(timeline_path + ": bad row at line " + std::to_string(lineno));
        }
        ReplayRecord r;
        r.timestamp = unix_from_iso8601(fields[0]);
        r.hist_p = std::stod(fields[1]);
        r.cf_p = std::stod(fields[2]);
        r.rev_p = std::stod(fields[3]);
        r.p_max = std::stod(fields[4]);
        r.status = fields[5];
        if (fields.size() >= 7) r.gap = std::stod(fields[6]);
        rep.records.push_back(r);
        ++rep.replayed;
        if (r.status == "good") ++rep.already_good;
        else if (r.status == "optimized") ++rep.optimized;
        else if (r.status == "time_limited") ++rep.time_limited;
        else ++rep.infeasible;
        const double hist_mwh = r.hist_p * hours / 1000.0;
        rep.energy_historical_mwh += hist_mwh;
        rep.energy_counterfactual_mwh += r.cf_p * hours / 1000.0;
        rep.revenue_historical += hist_mwh * price;
        rep.revenue_counterfactual += r.cf_p * hours / 1000.0 * price;
        rep.revenue_revenue_driven += r.rev_p * hours / 1000.0 * price;
        rep.revenue_historical_with_shutdown += (r.status == "good" ? hist_mwh : 0.0) * price;
    }
    return rep;
}

} // namespace windcf
