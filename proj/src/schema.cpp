#include "windcf/schema.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "windcf/errors.hpp"

namespace windcf {

using nlohmann::json;

FeatureSchema FeatureSchema::standard() {
    FeatureSchema s;
    s.names = {"P", "TN", "TT", "TA", "WS", "year", "month", "day", "hour", "minute"};
    s.controllable = {F_P, F_TN, F_TT};
    s.fixed = {F_TA, F_WS, F_YEAR, F_MONTH, F_DAY, F_HOUR, F_MINUTE};
    return s;
}

bool FeatureSchema::is_controllable(int feature) const {
    return std::find(controllable.begin(), controllable.end(), feature) != controllable.end();
}

int FeatureSchema::index_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    throw DataError("unknown feature name: " + name);
}

void FeatureSchema::validate() const {
    if (names.size() != static_cast<size_t>(kNumFeatures)) {
        throw DataError("schema must list exactly " + std::to_string(kNumFeatures) + " features");
    }
    std::vector<bool> seen(kNumFeatures, false);
    for (int f : controllable) {
        if (f < 0 || f >= kNumFeatures || seen[static_cast<size_t>(f)]) {
            throw DataError("bad controllable index in schema");
        }
        seen[static_cast<size_t>(f)] = true;
    }
    for (int f : fixed) {
        if (f < 0 || f >= kNumFeatures || seen[static_cast<size_t>(f)]) {
            throw DataError("controllable and fixed sets must partition the features");
        }
        seen[static_cast<size_t>(f)] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
        throw DataError("controllable and fixed sets must cover all features");
    }
}

void FeatureVector::validate() const {
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
    if (label && *label != 0 && *label != 1) throw DataError("label must be 0 or 1");
}

PowerCurve::PowerCurve(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {
    if (knots_.size() < 2) throw DataError("power curve needs at least two knots");
    for (size_t i = 0; i < knots_.size(); ++i) {
        if (knots_[i].second < 0.0) throw DataError("power curve values must be non-negative");
        if (i > 0 && knots_[i].first <= knots_[i - 1].first) {
            throw DataError("power curve knots must have strictly increasing wind speeds");
        }
        if (i > 0 && knots_[i].second < knots_[i - 1].second) {
            throw DataError("power curve must be non-decreasing");
        }
    }
    rated_ = knots_.back().second;
    cut_in_ = knots_.front().first;
    for (const auto& [ws, kw] : knots_) {
        if (kw <= 0.0) cut_in_ = ws;  // last knot with zero power
    }
}

double PowerCurve::p_max(double ws) const {
    if (ws < 0.0) throw std::invalid_argument("wind speed must be non-negative");
    if (knots_.empty()) throw DataError("power curve is empty");
    if (ws <= knots_.front().first) return knots_.front().second;
    if (ws >= knots_.back().first) return rated_;
    // Find the segment [i, i+1] containing ws and interpolate.
    size_t hi = 1;
    while (knots_[hi].first < ws) ++hi;
    const auto& [w0, p0] = knots_[hi - 1];
    const auto& [w1, p1] = knots_[hi];
    const double t = (ws - w0) / (w1 - w0);
    return p0 + t * (p1 - p0);
}

PowerCurve default_power_curve() {
    return PowerCurve({{0.0, 0.0},
                       {3.0, 0.0},
                       {4.0, 120.0},
                       {5.0, 310.0},
                       {6.0, 580.0},
                       {7.0, 990.0},
                       {8.0, 1570.0},
                       {9.0, 2310.0},
                       {10.0, 3120.0},
                       {11.0, 3900.0},
                       {12.0, 4450.0},
                       {13.0, 4750.0},
                       {14.0, 4920.0},
                       {15.0, 5000.0},
                       {25.0, 5000.0}});
}

FeatureBounds compute_bounds(const std::vector<FeatureVector>& dataset) {
    if (dataset.empty()) throw DataError("compute_bounds: empty dataset");
    FeatureBounds b;
    for (int f = 0; f < kNumFeatures; ++f) {
        double lo = dataset.front()[f], hi = lo;
        for (const auto& fv : dataset) {
            lo = std::min(lo, fv[f]);
            hi = std::max(hi, fv[f]);
        }
        b.lower[static_cast<size_t>(f)] = lo;
        b.upper[static_cast<size_t>(f)] = hi;
    }
    return b;
}

NormalizationScales compute_scales(const std::vector<FeatureVector>& dataset) {
    if (dataset.empty()) throw DataError("compute_scales: empty dataset");
    NormalizationScales s;
    const auto schema = FeatureSchema::standard();
    for (int f = 0; f < kNumFeatures; ++f) {
        double sum = 0.0;
        for (const auto& fv : dataset) sum += fv[f];
        const double mean = sum / static_cast<double>(dataset.size());
        if (schema.is_controllable(f) && mean <= 0.0) {
            throw DataError("compute_scales: non-positive mean for controllable feature " +
                            schema.names[static_cast<size_t>(f)]);
        }
        s.mean[static_cast<size_t>(f)] = mean;
    }
    return s;
}

FeatureVector feature_vector_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad instance JSON: ") + e.what());
    }
    FeatureVector fv;
    try {
        if (j.contains("timestamp")) {
            if (j["timestamp"].is_string()) {
                fv.timestamp = unix_from_iso8601(j["timestamp"].get<std::string>());
            } else {
                fv.timestamp = j["timestamp"].get<std::int64_t>();
            }
        }
        fv[F_P] = j.at("P").get<double>();
        fv[F_TN] = j.at("TN").get<double>();
        fv[F_TT] = j.at("TT").get<double>();
        fv[F_TA] = j.at("TA").get<double>();
        fv[F_WS] = j.at("WS").get<double>();
        if (j.contains("label")) fv.label = j["label"].get<int>();
    } catch (const json::exception& e) {
        throw DataError(std::string("bad instance JSON: ") + e.what());
    }
    apply_date_features(fv);
    fv.validate();
    return fv;
}

std::string feature_vector_to_json(const FeatureVector& fv) {
    const auto schema = FeatureSchema::standard();
    json j;
    j["timestamp"] = iso8601_from_unix(fv.timestamp);
    for (int f : {F_P, F_TN, F_TT, F_TA, F_WS}) {
        j[schema.names[static_cast<size_t>(f)]] = fv[f];
    }
    if (fv.label) j["label"] = *fv.label;
    return j.dump();
}

// --- calendar ------------------------------------------------------------

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
static std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

static void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

CivilTime civil_from_unix(std::int64_t t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    CivilTime c{};
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(rem / 3600);
    c.minute = static_cast<int>((rem % 3600) / 60);
    c.second = static_cast<int>(rem % 60);
    return c;
}

std::int64_t unix_from_civil(const CivilTime& c) {
    return days_from_civil(c.year, c.month, c.day) * 86400 + c.hour * 3600 + c.minute * 60 +
           c.second;
}

std::string iso8601_from_unix(std::int64_t t) {
    const CivilTime c = civil_from_unix(t);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year, c.month, c.day,
                  c.hour, c.minute, c.second);
    return buf;
}

std::int64_t unix_from_iso8601(const std::string& s) {
    CivilTime c{};
    int n = 0;
    // Accept "YYYY-MM-DD" and "YYYY-MM-DDTHH:MM[:SS][Z]".
    const int got = std::sscanf(s.c_str(), "%d-%d-%d%*c%d:%d:%d%n", &c.year, &c.month, &c.day,
                                &c.hour, &c.minute, &c.second, &n);
    if (got < 3) throw DataError("bad timestamp: " + s);
    if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > 31 || c.hour < 0 || c.hour > 23 ||
        c.minute < 0 || c.minute > 59 || c.second < 0 || c.second > 60) {
        throw DataError("bad timestamp: " + s);
    }
    return unix_from_civil(c);
}

void apply_date_features(FeatureVector& fv) {
    const CivilTime c = civil_from_unix(fv.timestamp);
    fv[F_YEAR] = c.year;
    fv[F_MONTH] = c.month;
    fv[F_DAY] = c.day;
    fv[F_HOUR] = c.hour;
    fv[F_MINUTE] = c.minute;
}

// --- assets config file ---------------------------------------------------

std::string SchemaAssets::to_json() const {
    json j;
    j["features"] = schema.names;
    json ctrl = json::array(), fix = json::array();
    for (int f : schema.controllable) ctrl.push_back(schema.names[static_cast<size_t>(f)]);
    for (int f : schema.fixed) fix.push_back(schema.names[static_cast<size_t>(f)]);
    j["controllable"] = ctrl;
    j["fixed"] = fix;
    json jb = json::object(), js = json::object();
    for (int f : schema.controllable) {
        const auto& name = schema.names[static_cast<size_t>(f)];
        jb[name] = {bounds.lower[static_cast<size_t>(f)], bounds.upper[static_cast<size_t>(f)]};
        js[name] = scales.mean[static_cast<size_t>(f)];
    }
    j["bounds"] = jb;
    j["scales"] = js;
    json knots = json::array();
    for (const auto& [ws, kw] : curve.knots()) knots.push_back({ws, kw});
    j["power_curve"] = {{"knots", knots}};
    return j.dump(2) + "\n";
}

SchemaAssets SchemaAssets::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad assets JSON: ") + e.what());
    }
    try {
        SchemaAssets a;
        a.schema.names = j.at("features").get<std::vector<std::string>>();
        auto name_index = [&](const std::string& n) {
            for (size_t i = 0; i < a.schema.names.size(); ++i) {
                if (a.schema.names[i] == n) return static_cast<int>(i);
            }
            throw DataError("assets: unknown feature " + n);
        };
        for (const auto& n : j.at("controllable")) a.schema.controllable.push_back(name_index(n));
        for (const auto& n : j.at("fixed")) a.schema.fixed.push_back(name_index(n));
        a.schema.validate();
        for (int f : a.schema.controllable) {
            const auto& name = a.schema.names[static_cast<size_t>(f)];
            const auto& lohi = j.at("bounds").at(name);
            a.bounds.lower[static_cast<size_t>(f)] = lohi.at(0).get<double>();
            a.bounds.upper[static_cast<size_t>(f)] = lohi.at(1).get<double>();
            if (a.bounds.lower[static_cast<size_t>(f)] > a.bounds.upper[static_cast<size_t>(f)]) {
                throw DataError("assets: lower bound exceeds upper bound for " + name);
            }
            a.scales.mean[static_cast<size_t>(f)] = j.at("scales").at(name).get<double>();
        }
        std::vector<std::pair<double, double>> knots;
        for (const auto& k : j.at("power_curve").at("knots")) {
            knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
        }
        a.curve = PowerCurve(std::move(knots));
        return a;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad assets JSON: ") + e.what());
    }
}

SchemaAssets SchemaAssets::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open assets file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void SchemaAssets::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write assets file: " + path);
    out << to_json();
}

} // namespace windcf
