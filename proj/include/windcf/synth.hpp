#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windcf/schema.hpp"

namespace windcf {

/// Shape parameters of the synthetic SCADA series. The defaults target the
/// cadence and class balance of a multi-year single-turbine recording.
struct GeneratorSpec {
    double duration_years = 4.0;
    int cadence_sec = 600;
    double anomaly_fraction = 1759.0 / 49642.0;  // ~3.54% anomalous samples
    std::uint64_t seed = 1;
    std::string start = "2021-01-01T00:00:00Z";

    // Per-channel noise levels.
    double noise_ws = 1.6;
    double noise_ta = 1.2;
    double noise_tt = 1.0;
    double noise_tn = 0.6;

    // Anomaly episodes: sustained transformer-temperature excess.
    double episode_mean_length = 18.0;  // samples
    double episode_amp_lo = 10.0;       // deg C above the controller surface
    double episode_amp_hi = 18.0;
    double label_threshold = 6.0;  // label 1 iff TT - g_tt(P, TA) >= threshold

    // Curtailment episodes (production below the curve).
    double curtail_prob = 0.004;       // per-sample start probability
    double curtail_mean_length = 24.0;  // samples

    void validate() const;
    std::string to_json() const;
    static GeneratorSpec from_json(const std::string& text);
    static GeneratorSpec load(const std::string& path);
};

/// The ground-truth controller surface used by the generator:
///   g_tt(P, TA) = TA + tt_offset + tt_gain * (P / rated)^1.5
///   g_tn(P, TA) = TA + tn_offset + tn_gain * (P / rated)
/// Exported with the data so trained surrogates have a known noise floor.
struct GroundTruth {
    double rated_power = 0.0;
    double tt_offset = 18.0, tt_gain = 24.0;
    double tn_offset = 7.0, tn_gain = 9.0;
    double noise_tt = 0.0, noise_tn = 0.0;
    double label_threshold = 0.0;

    double g_tt(double p, double ta) const;
    double g_tn(double p, double ta) const;
    // The labeling rule applied to emitted values.
    int label_of(double p, double ta, double tt) const;

    std::string to_json() const;
};

struct SynthResult {
    std::vector<FeatureVector> samples;  // time-ordered, labeled
    GroundTruth truth;
};

// Deterministic per seed; every sample satisfies 0 <= P <= p_max(WS).
SynthResult generate(const GeneratorSpec& spec, const PowerCurve& curve = default_power_curve());

// CSV I/O: header "timestamp,P,TN,TT,TA,WS,label", ISO-8601 timestamps.
void write_csv(const std::string& path, const std::vector<FeatureVector>& samples);
std::vector<FeatureVector> read_csv(const std::string& path);
std::string csv_string(const std::vector<FeatureVector>& samples);

} // namespace windcf
