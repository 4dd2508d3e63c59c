#pragma once

#include "cdf/feature_matrix.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cdf {

enum class FeatureGroup { Optical, Electrical, Temperature };

/// Parameters of the synthetic EDFA telemetry generator.
///
/// A load level in [0, 1] sweeps the input power across its range and modulates
/// the electrical channels. The gain range is carried for descriptors only;
/// the output-power ceiling sets the `max_output_power_setpoint_dbm` register.
/// Non-constant features are a base value modulated by load and ambient
/// temperature, plus Gaussian noise with standard deviation `noise * |base|`.
struct GeneratorConfig {
    std::int64_t samples = 1000;
    std::int64_t features = 41;
    std::int64_t constant_features = 14;
    double noise = 0.01;
    double input_power_min_dbm = -35.0;
    double input_power_max_dbm = 1.0;
    double gain_min_db = 19.0;
    double gain_max_db = 35.0;
    double max_output_power_dbm = 20.0;
    double ambient_temperature_c = 35.0;
    double temperature_spread_c = 3.0;

    void validate() const;
};

enum class DriftProfile { LinearRamp, Step };

struct DriftSchedule {
    double degradation_rate = 0.0;
    std::int64_t onset_inspection = 0;
    DriftProfile profile = DriftProfile::LinearRamp;

    /// Drift ratio I/I0 - 1 at inspection `t` of a stream of `length`.
    /// The ramp reaches `degradation_rate` exactly at the last inspection.
    double drift_at(std::int64_t t, std::int64_t length) const;
};

struct InspectionStream {
    FeatureMatrix samples;
    DriftSchedule schedule;
    std::vector<double> drift;         // per inspection
    std::vector<bool> ground_truth;    // true = drifted
    std::int64_t length = 0;
};

/// Name, group and model coefficients of every generated feature, in column order.
struct FeatureSpec {
    std::string name;
    FeatureGroup group;
    bool constant = false;
    double base = 0.0;
    double load_gain = 0.0;      // relative change per unit load deviation from 0.5
    double temperature_gain = 0.0;
};

std::vector<FeatureSpec> feature_catalogue(const GeneratorConfig& config);

/// Features whose reading scales with pump drive current. Identified by name:
/// the name starts with "pump" and contains "current".
bool is_pump_current_feature(const std::string& name);
std::vector<std::size_t> pump_current_columns(const FeatureMatrix& matrix);

FeatureMatrix generate_dataset(const GeneratorConfig& config, std::uint64_t seed);

InspectionStream generate_stream(const GeneratorConfig& base, const DriftSchedule& schedule,
                                 std::int64_t length, std::uint64_t seed);

/// Copy of `matrix` with pump-current columns scaled by (1 + ratio).
FeatureMatrix inject_drift(const FeatureMatrix& matrix, double ratio);

/// Row-wise variant: row i scaled by (1 + ratios[i]).
FeatureMatrix inject_drift(const FeatureMatrix& matrix, const std::vector<double>& ratios);

// CSV: header of feature names, one sample per row, '.' decimal separator.
void write_csv(std::ostream& out, const FeatureMatrix& matrix);
FeatureMatrix read_csv(std::istream& in);
void write_csv_file(const std::string& path, const FeatureMatrix& matrix);
FeatureMatrix read_csv_file(const std::string& path);

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const DriftSchedule& s);
void from_json(const nlohmann::json& j, DriftSchedule& s);

std::string to_string(DriftProfile profile);
DriftProfile drift_profile_from_string(const std::string& text);

}  // namespace cdf
