#include "windcf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "windcf/errors.hpp"

namespace windcf {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Bit-level deterministic draws (independent of library distribution
// implementations, so reruns are byte-identical).
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        // Box-Muller; consumes two uniforms.
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }
    double clamped_normal(double sigma, double clip_sigmas = 3.0) {
        return std::clamp(normal(), -clip_sigmas, clip_sigmas) * sigma;
    }
    int geometric_length(double mean) {
        // Support >= 1 with the requested mean.
        if (mean <= 1.0) return 1;
        const double p = 1.0 / mean;
        double u = uniform();
        while (u <= 1e-300) u = uniform();
        return 1 + static_cast<int>(std::floor(std::log(u) / std::log(1.0 - p)));
    }
};

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

void GeneratorSpec::validate() const {
    if (duration_years <= 0.0) throw DataError("generator: duration must be > 0");
    if (cadence_sec <= 0) throw DataError("generator: cadence must be > 0");
    if (anomaly_fraction <= 0.0 || anomaly_fraction >= 0.5) {
        throw DataError("generator: anomaly fraction must be in (0, 0.5)");
    }
    if (episode_amp_lo > episode_amp_hi) throw DataError("generator: bad episode amplitudes");
    if (episode_mean_length < 1.0) throw DataError("generator: episode length must be >= 1");
}

double GroundTruth::g_tt(double p, double ta) const {
    return ta + tt_offset + tt_gain * std::pow(std::max(0.0, p) / rated_power, 1.5);
}

double GroundTruth::g_tn(double p, double ta) const {
    return ta + tn_offset + tn_gain * (std::max(0.0, p) / rated_power);
}

int GroundTruth::label_of(double p, double ta, double tt) const {
    return tt - g_tt(p, ta) >= label_threshold ? 1 : 0;
}

std::string GroundTruth::to_json() const {
    json j;
    j["rated_power"] = rated_power;
    j["tt"] = {{"offset", tt_offset}, {"gain", tt_gain}, {"exponent", 1.5}, {"noise", noise_tt}};
    j["tn"] = {{"offset", tn_offset}, {"gain", tn_gain}, {"exponent", 1.0}, {"noise", noise_tn}};
    j["label_rule"] = {{"threshold", label_threshold},
                       {"definition", "label = 1 iff TT - g_tt(P, TA) >= threshold"}};
    return j.dump(2) + "\n";
}

SynthResult generate(const GeneratorSpec& spec, const PowerCurve& curve) {
    spec.validate();
    Rng rng(spec.seed);
    SynthResult out;
    out.truth.rated_power = curve.rated_power();
    out.truth.noise_tt = spec.noise_tt;
    out.truth.noise_tn = spec.noise_tn;
    out.truth.label_threshold = spec.label_threshold;
    const GroundTruth& gt = out.truth;

    const std::int64_t start = unix_from_iso8601(spec.start);
    const long n = static_cast<long>(spec.duration_years * 365.25 * 86400.0 /
                                     static_cast<double>(spec.cadence_sec));
    out.samples.reserve(static_cast<size_t>(n));

    // Episode start probability from the target fraction and mean length.
    const double p_anomaly =
        spec.anomaly_fraction / ((1.0 - spec.anomaly_fraction) * spec.episode_mean_length);

    double ws_dev = 0.0, ta_dev = 0.0;
    int anomaly_left = 0;
    double anomaly_amp = 0.0;
    int curtail_left = 0;
    double curtail_factor = 1.0;

    for (long i = 0; i < n; ++i) {
        const std::int64_t ts = start + static_cast<std::int64_t>(i) * spec.cadence_sec;
        const CivilTime ct = civil_from_unix(ts);
        const double day_of_year =
            static_cast<double>(ts % 31557600LL) / 86400.0;  // position in a 365.25d cycle
        const double hour_of_day = ct.hour + ct.minute / 60.0;

        // Wind: seasonal mean plus an AR(1) deviation, clipped to [0, 27].
        const double ws_mean = 8.5 + 2.5 * std::sin(2.0 * kPi * day_of_year / 365.25 + 2.9);
        ws_dev = 0.96 * ws_dev + rng.clamped_normal(spec.noise_ws) * 0.28;
        const double ws = std::clamp(round2(ws_mean + 3.2 * ws_dev), 0.0, 27.0);

        // Ambient: seasonal + diurnal + AR(1).
        const double ta_mean = 11.0 + 9.0 * std::sin(2.0 * kPi * day_of_year / 365.25 - kPi / 2.0 + 0.3) +
                               2.5 * std::sin(2.0 * kPi * hour_of_day / 24.0 - 2.5);
        ta_dev = 0.9 * ta_dev + rng.clamped_normal(spec.noise_ta) * 0.44;
        const double ta = round2(ta_mean + ta_dev);

        // Curtailment episodes cut production below the curve.
        if (curtail_left > 0) {
            --curtail_left;
        } else if (rng.uniform() < spec.curtail_prob) {
            curtail_left = rng.geometric_length(spec.curtail_mean_length);
            curtail_factor = rng.uniform(0.0, 0.8);
        }
        const double avail = curtail_left > 0 ? curtail_factor : 1.0 - 0.03 * rng.uniform();
        const double pmax = curve.p_max(ws);
        const double p = std::floor(std::max(0.0, pmax * avail));

        // Temperatures follow the hidden controller surface plus noise.
        const double tn = std::round(gt.g_tn(p, ta) + rng.clamped_normal(spec.noise_tn));

        if (anomaly_left > 0) {
            --anomaly_left;
        } else if (rng.uniform() < p_anomaly) {
            anomaly_left = rng.geometric_length(spec.episode_mean_length);
            anomaly_amp = rng.uniform(spec.episode_amp_lo, spec.episode_amp_hi);
        }
        const double excess = anomaly_left > 0 ? anomaly_amp : 0.0;
        const double tt = std::round(gt.g_tt(p, ta) + excess + rng.clamped_normal(spec.noise_tt));

        FeatureVector fv;
        fv.timestamp = ts;
        fv[F_P] = p;
        fv[F_TN] = tn;
        fv[F_TT] = tt;
        fv[F_TA] = ta;
        fv[F_WS] = ws;
        apply_date_features(fv);
        fv.label = gt.label_of(p, ta, tt);
        out.samples.push_back(fv);
    }
    return out;
}

std::string csv_string(const std::vector<FeatureVector>& samples) {
    std::string out = "timestamp,P,TN,TT,TA,WS,label\n";
    char buf[160];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%lld,%.2f,%.2f,%d\n",
                      iso8601_from_unix(s.timestamp).c_str(),
                      static_cast<long long>(s[F_P]), static_cast<long long>(s[F_TN]),
                      static_cast<long long>(s[F_TT]), s[F_TA], s[F_WS],
                      s.label.value_or(0));
        out += buf;
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<FeatureVector>& samples) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << csv_string(samples);
}

std::vector<FeatureVector> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError(path + ": empty file");
    if (line.rfind("timestamp,P,TN,TT,TA,WS", 0) != 0) {
        throw DataError(path + ": unexpected CSV header");
    }
    std::vector<FeatureVector> out;
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 6) throw DataError(path + ": bad row at line " + std::to_string(lineno));
        FeatureVector fv;
        try {
            fv.timestamp = unix_from_iso8601(fields[0]);
            fv[F_P] = std::stod(fields[1]);
            fv[F_TN] = std::stod(fields[2]);
            fv[F_TT] = std::stod(fields[3]);
            fv[F_TA] = std::stod(fields[4]);
            fv[F_WS] = std::stod(fields[5]);
            if (fields.size() >= 7 && !fields[6].empty()) fv.label = std::stoi(fields[6]);
        } catch (const std::exception&) {
            throw DataError(path + ": bad value at line " + std::to_string(lineno));
        }
        apply_date_features(fv);
        fv.validate();
        out.push_back(fv);
    }
    return out;
}

std::string GeneratorSpec::to_json() const {
    json j;
    j["duration_years"] = duration_years;
    j["cadence_sec"] = cadence_sec;
    j["anomaly_fraction"] = anomaly_fraction;
    j["seed"] = seed;
    j["start"] = start;
    j["noise"] = {{"ws", noise_ws}, {"ta", noise_ta}, {"tt", noise_tt}, {"tn", noise_tn}};
    j["episode"] = {{"mean_length", episode_mean_length},
                    {"amplitude_lo", episode_amp_lo},
                    {"amplitude_hi", episode_amp_hi}};
    j["label_threshold"] = label_threshold;
    j["curtail"] = {{"prob", curtail_prob}, {"mean_length", curtail_mean_length}};
    return j.dump(2) + "\n";
}

GeneratorSpec GeneratorSpec::from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        GeneratorSpec s;
        if (j.contains("duration_years")) s.duration_years = j["duration_years"].get<double>();
        if (j.contains("cadence_sec")) s.cadence_sec = j["cadence_sec"].get<int>();
        if (j.contains("anomaly_fraction")) s.anomaly_fraction = j["anomaly_fraction"].get<double>();
        if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("start")) s.start = j["start"].get<std::string>();
        if (j.contains("noise")) {
            const auto& nn = j["noise"];
            if (nn.contains("ws")) s.noise_ws = nn["ws"].get<double>();
            if (nn.contains("ta")) s.noise_ta = nn["ta"].get<double>();
            if (nn.contains("tt")) s.noise_tt = nn["tt"].get<double>();
            if (nn.contains("tn")) s.noise_tn = nn["tn"].get<double>();
        }
        if (j.contains("episode")) {
            const auto& e = j["episode"];
            if (e.contains("mean_length")) s.episode_mean_length = e["mean_length"].get<double>();
            if (e.contains("amplitude_lo")) s.episode_amp_lo = e["amplitude_lo"].get<double>();
            if (e.contains("amplitude_hi")) s.episode_amp_hi = e["amplitude_hi"].get<double>();
        }
        if (j.contains("label_threshold")) s.label_threshold = j["label_threshold"].get<double>();
        if (j.contains("curtail")) {
            const auto& c = j["curtail"];
            if (c.contains("prob")) s.curtail_prob = c["prob"].get<double>();
            if (c.contains("mean_length")) s.curtail_mean_length = c["mean_length"].get<double>();
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad generator spec JSON: ") + e.what());
    }
}

GeneratorSpec GeneratorSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open generator spec: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

} // namespace windcf
