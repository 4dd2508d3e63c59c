#pragma once

#include "cdf/pipeline.hpp"
#include "cdf/telemetry.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cdf {

enum class State { OK, nOK };

std::string to_string(State state);

struct DetectionVerdict {
    int window = 1;
    std::vector<int> raw;            // 1 = anomaly cluster
    std::vector<double> smoothed;    // trailing mean of raw
    std::vector<State> state;        // nOK iff smoothed > 0.5
    std::optional<std::int64_t> transition_index;

    std::size_t size() const { return raw.size(); }
    std::size_t nok_count() const;
};

/// Trailing moving average over min(window, t + 1) values.
std::vector<double> smooth(const std::vector<int>& raw, int window);

DetectionVerdict verdict_from_raw(const std::vector<int>& raw, int window);

DetectionVerdict classify_stream(const PipelineModel& pipeline, const FeatureMatrix& samples, int window);
DetectionVerdict classify_stream(const PipelineModel& pipeline, const InspectionStream& stream, int window);

struct CpdResult {
    Algorithm algorithm = Algorithm::PossCP;
    std::vector<double> grid;
    std::vector<double> nok_fraction;   // share of nOK inspections per grid value
    std::optional<double> minimal_ratio;

    bool detected() const { return minimal_ratio.has_value(); }
};

/// Scans `grid` (ascending, >= 0) and reports the smallest ratio at which more than half
/// of the drifted evaluation inspections end up nOK. Ratio 0 never counts.
CpdResult minimal_cpd(const PipelineModel& pipeline, const FeatureMatrix& nominal, const std::vector<double>& grid,
                      int window);

struct StreamReport {
    double rate = 0.0;
    DriftSchedule schedule;
    DetectionVerdict verdict;
};

struct IdentificationReport {
    std::int64_t length = 0;
    int window = 1;
    std::vector<StreamReport> streams;
};

/// One stream per rate drawn from `base` with the same `seed`; rates must contain 0.
IdentificationReport run_anomaly_identification(const PipelineModel& pipeline, const GeneratorConfig& base,
                                                const std::vector<double>& rates, std::int64_t length, int window,
                                                std::uint64_t seed, DriftProfile profile = DriftProfile::LinearRamp,
                                                std::int64_t onset = 0);

void to_json(nlohmann::json& j, const DetectionVerdict& v);
void to_json(nlohmann::json& j, const CpdResult& r);
void to_json(nlohmann::json& j, const IdentificationReport& r);

// inspection,raw,smoothed,state
void write_verdict_csv(std::ostream& out, const DetectionVerdict& v);
// inspection plus one smoothed-membership column per rate
void write_curves_csv(std::ostream& out, const IdentificationReport& r);

}  // namespace cdf
