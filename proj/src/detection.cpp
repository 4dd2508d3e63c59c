#include "cdf/detection.hpp"

#include "cdf/error.hpp"

#include <algorithm>
#include <sstream>

namespace cdf {

std::string to_string(State state) {
    return state == State::nOK ? "nOK" : "OK";
}

std::size_t DetectionVerdict::nok_count() const {
    return static_cast<std::size_t>(std::count(state.begin(), state.end(), State::nOK));
}

std::vector<double> smooth(const std::vector<int>& raw, int window) {
    if (window < 1) throw Error(ErrorKind::InvalidConfig, "window must be at least 1");
    std::vector<double> out(raw.size());
    long long sum = 0;
    const auto w = static_cast<std::size_t>(window);
    for (std::size_t t = 0; t < raw.size(); ++t) {
        sum += raw[t];
        if (t >= w) sum -= raw[t - w];
        out[t] = static_cast<double>(sum) / static_cast<double>(std::min(w, t + 1));
    }
    return out;
}

DetectionVerdict verdict_from_raw(const std::vector<int>& raw, int window) {
    DetectionVerdict v;
    v.window = window;
    v.raw = raw;
    v.smoothed = smooth(raw, window);
    v.state.reserve(raw.size());
    for (std::size_t t = 0; t < raw.size(); ++t) {
        const State s = v.smoothed[t] > 0.5 ? State::nOK : State::OK;
        if (s == State::nOK && !v.transition_index) v.transition_index = static_cast<std::int64_t>(t);
        v.state.push_back(s);
    }
    return v;
}

DetectionVerdict classify_stream(const PipelineModel& pipeline, const FeatureMatrix& samples, int window) {
    if (window < 1) throw Error(ErrorKind::InvalidConfig, "window must be at least 1");
    return verdict_from_raw(pipeline.classify(samples), window);
}

DetectionVerdict classify_stream(const PipelineModel& pipeline, const InspectionStream& stream, int window) {
    return classify_stream(pipeline, stream.samples, window);
}

CpdResult minimal_cpd(const PipelineModel& pipeline, const FeatureMatrix& nominal, const std::vector<double>& grid,
                      int window) {
    if (grid.empty()) throw Error(ErrorKind::InvalidConfig, "CPD grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0)) throw Error(ErrorKind::InvalidConfig, "CPD grid values must be >= 0");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw Error(ErrorKind::InvalidConfig, "CPD grid must be ascending");
    }
    CpdResult result;
    result.algorithm = pipeline.algorithm;
    result.grid = grid;
    for (double ratio : grid) {
        const DetectionVerdict v = classify_stream(pipeline, inject_drift(nominal, ratio), window);
        const double share = static_cast<double>(v.nok_count()) / static_cast<double>(v.size());
        result.nok_fraction.push_back(share);
        if (ratio > 0.0 && share > 0.5 && !result.minimal_ratio) result.minimal_ratio = ratio;
    }
    return result;
}

IdentificationReport run_anomaly_identification(const PipelineModel& pipeline, const GeneratorConfig& base,
                                                const std::vector<double>& rates, std::int64_t length, int window,
                                                std::uint64_t seed, DriftProfile profile, std::int64_t onset) {
    if (std::find(rates.begin(), rates.end(), 0.0) == rates.end()) {
        throw Error(ErrorKind::InvalidConfig, "degradation rates must include 0 as the reference stream");
    }
    IdentificationReport report;
    report.length = length;
    report.window = window;
    for (double rate : rates) {
        const DriftSchedule schedule{rate, onset, profile};
        const InspectionStream stream = generate_stream(base, schedule, length, seed);
        report.streams.push_back({rate, schedule, classify_stream(pipeline, stream, window)});
    }
    return report;
}

void to_json(nlohmann::json& j, const DetectionVerdict& v) {
    std::vector<std::string> states;
    for (State s : v.state) states.push_back(to_string(s));
    j = nlohmann::json{{"window", v.window}, {"raw", v.raw}, {"smoothed", v.smoothed}, {"state", states}};
    j["transition_index"] = v.transition_index ? nlohmann::json(*v.transition_index) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const CpdResult& r) {
    j = nlohmann::json{{"algorithm", to_string(r.algorithm)},
                       {"grid", r.grid},
                       {"nok_fraction", r.nok_fraction},
                       {"detected", r.detected()}};
    j["minimal_ratio"] = r.minimal_ratio ? nlohmann::json(*r.minimal_ratio) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const IdentificationReport& r) {
    j = nlohmann::json{{"length", r.length}, {"window", r.window}, {"streams", nlohmann::json::array()}};
    for (const auto& s : r.streams) {
        j["streams"].push_back({{"rate", s.rate}, {"schedule", s.schedule}, {"verdict", s.verdict}});
    }
}

void write_verdict_csv(std::ostream& out, const DetectionVerdict& v) {
    out << "inspection,raw,smoothed,state\n";
    for (std::size_t t = 0; t < v.size(); ++t) {
        out << t << ',' << v.raw[t] << ',' << format_number(v.smoothed[t]) << ',' << to_string(v.state[t]) << '\n';
    }
}

namespace {

std::string rate_label(double rate) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << "dr_" << std::llround(rate * 100.0);
    return s.str();
}

}  // namespace

void write_curves_csv(std::ostream& out, const IdentificationReport& r) {
    out << "inspection";
    for (const auto& s : r.streams) out << ',' << rate_label(s.rate);
    out << '\n';
    for (std::int64_t t = 0; t < r.length; ++t) {
        out << t;
        for (const auto& s : r.streams) out << ',' << format_number(s.verdict.smoothed[static_cast<std::size_t>(t)]);
        out << '\n';
    }
}

}  // namespace cdf
