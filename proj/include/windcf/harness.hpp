#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windcf/counterfactual.hpp"
#include "windcf/schema.hpp"

namespace windcf {

struct ReplayConfig {
    CfMode mode = CfMode::Operator;
    ControlLimits limits;
    RevenueConfig revenue;       // price also drives the revenue accounting
    SolveConfig solve;
    int jobs = 1;
    int cadence_sec = 600;       // slot length for gap accounting and MWh
};

struct ReplayRecord {
    std::int64_t timestamp = 0;
    double hist_p = 0.0;
    double cf_p = 0.0;    // suggested power (fallback 0 when infeasible)
    double rev_p = 0.0;   // revenue-driven stage-2 power (== cf_p outside revenue mode)
    double p_max = 0.0;
    std::string status;   // good | optimized | infeasible | time_limited
    double gap = 0.0;
    double objective = 0.0;  // distance objective of the applied counterfactual
};

struct ReplayReport {
    std::string mode;
    long already_good = 0, optimized = 0, infeasible = 0, time_limited = 0;
    long replayed = 0;
    long gaps = 0;  // expected-but-missing slots inside the range
    std::vector<ReplayRecord> records;

    // Totals over the replayed range, in euro / MWh.
    double revenue_historical = 0.0;
    double revenue_counterfactual = 0.0;
    double revenue_revenue_driven = 0.0;
    double revenue_historical_with_shutdown = 0.0;
    double energy_historical_mwh = 0.0;
    double energy_counterfactual_mwh = 0.0;

    std::string summary_json() const;
};

/// Replays every sample with from <= timestamp <= to through classify ->
/// (solve) -> account. Snapshots are independent; suggestions are not fed
/// back into later samples.
ReplayReport replay(const std::vector<FeatureVector>& data, std::int64_t from, std::int64_t to,
                    const CfModels& models, const SchemaAssets& assets, const ReplayConfig& cfg);

// Writes <out_dir>/timeline.csv and <out_dir>/summary.json.
void write_report(const ReplayReport& report, const std::string& out_dir);

// Re-derives a summary from a timeline.csv (counts and revenue re-summed).
ReplayReport summarize_timeline(const std::string& timeline_path, double price,
                                int cadence_sec = 600);

} // namespace windcf
