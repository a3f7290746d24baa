#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace windcf {

/// Feature indices of one 10-minute SCADA sample. The date is carried as
/// five calendar-component features so models can consume it numerically.
enum Feature : int {
    F_P = 0,   // power production, kW
    F_TN = 1,  // nacelle temperature, deg C
    F_TT = 2,  // transformer temperature, deg C
    F_TA = 3,  // ambient temperature, deg C
    F_WS = 4,  // wind speed, m/s
    F_YEAR = 5,
    F_MONTH = 6,
    F_DAY = 7,
    F_HOUR = 8,
    F_MINUTE = 9,
};

inline constexpr int kNumFeatures = 10;

/// Names and the controllable/fixed split of the feature space.
/// Controllables are the quantities a power-setpoint controller can steer;
/// everything else is pinned to its measured value.
struct FeatureSchema {
    std::vector<std::string> names;   // size kNumFeatures, fixed order
    std::vector<int> controllable;    // {P, TN, TT}
    std::vector<int> fixed;           // {TA, WS, year..minute}

    static FeatureSchema standard();

    bool is_controllable(int feature) const;
    // Index of a named feature; throws DataError if unknown.
    int index_of(const std::string& name) const;
    void validate() const;
};

/// One sample: feature values plus timestamp and optional label
/// (0 = good, 1 = anomalous).
struct FeatureVector {
    std::int64_t timestamp = 0;              // unix seconds, UTC
    std::array<double, kNumFeatures> values{};
    std::optional<int> label;

    double operator[](int f) const { return values[static_cast<size_t>(f)]; }
    double& operator[](int f) { return values[static_cast<size_t>(f)]; }
    void validate() const;
};

/// Per-controllable-feature box [lower, upper].
struct FeatureBounds {
    std::array<double, kNumFeatures> lower{};
    std::array<double, kNumFeatures> upper{};
};

/// Per-controllable-feature mean, used to normalize the distance objective.
struct NormalizationScales {
    std::array<double, kNumFeatures> mean{};
};

/// Monotone piecewise-linear wind speed -> maximum power map.
class PowerCurve {
public:
    PowerCurve() = default;
    explicit PowerCurve(std::vector<std::pair<double, double>> knots);

    // Curve value at ws; constant at rated power beyond the last knot.
    // Throws std::invalid_argument for ws < 0.
    double p_max(double ws) const;

    double cut_in_speed() const { return cut_in_; }
    double rated_power() const { return rated_; }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

private:
    std::vector<std::pair<double, double>> knots_;
    double cut_in_ = 0.0;
    double rated_ = 0.0;
};

/// The default synthetic turbine curve shipped with the repo (S-shaped,
/// 3 m/s cut-in, 5 MW rated plateau).
PowerCurve default_power_curve();

/// Everything the counterfactual builder needs besides the trained models.
struct SchemaAssets {
    FeatureSchema schema;
    FeatureBounds bounds;
    NormalizationScales scales;
    PowerCurve curve;

    std::string to_json() const;
    static SchemaAssets from_json(const std::string& text);
    static SchemaAssets load(const std::string& path);
    void save(const std::string& path) const;
};

// Per-controllable min/max over the dataset. Throws DataError on empty input.
FeatureBounds compute_bounds(const std::vector<FeatureVector>& dataset);

// Arithmetic mean per controllable feature. Throws DataError on empty input
// or a non-positive mean (the objective divides by mean^2).
NormalizationScales compute_scales(const std::vector<FeatureVector>& dataset);

// One sample as JSON: {"timestamp": ISO-8601 or unix seconds, "P": kW,
// "TN"/"TT"/"TA": deg C, "WS": m/s, "label": 0|1 (optional)}.
FeatureVector feature_vector_from_json(const std::string& text);
std::string feature_vector_to_json(const FeatureVector& fv);

// Calendar helpers (proleptic Gregorian, UTC).
struct CivilTime {
    int year, month, day, hour, minute, second;
};
CivilTime civil_from_unix(std::int64_t t);
std::int64_t unix_from_civil(const CivilTime& c);
std::string iso8601_from_unix(std::int64_t t);
std::int64_t unix_from_iso8601(const std::string& s);
// Fills the five date features of `fv` from its timestamp.
void apply_date_features(FeatureVector& fv);

} // namespace windcf
