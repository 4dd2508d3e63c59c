#include "cdf/telemetry.hpp"

#include "cdf/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace cdf {

void GeneratorConfig::validate() const {
    if (samples <= 0) throw Error(ErrorKind::InvalidConfig, "sample count must be positive");
    if (features <= 0) throw Error(ErrorKind::InvalidConfig, "feature count must be positive");
    if (constant_features < 0 || constant_features > features) {
        throw Error(ErrorKind::InvalidConfig, "constant feature count must lie in [0, features]");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) {
        throw Error(ErrorKind::InvalidConfig, "noise must be a finite non-negative value");
    }
    if (!(input_power_min_dbm < input_power_max_dbm)) {
        throw Error(ErrorKind::InvalidConfig, "input power range is empty");
    }
    if (!(gain_min_db <= gain_max_db)) throw Error(ErrorKind::InvalidConfig, "gain range is empty");
    if (!(temperature_spread_c >= 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "temperature spread must be non-negative");
    }
}

double DriftSchedule::drift_at(std::int64_t t, std::int64_t length) const {
    if (t < onset_inspection) return 0.0;
    if (profile == DriftProfile::Step) return degradation_rate;
    const auto span = static_cast<double>(length - onset_inspection);
    return degradation_rate * static_cast<double>(t - onset_inspection + 1) / span;
}

namespace {

// Active (non-constant) features in priority order. When fewer active features
// are requested the list is truncated; a pump-current channel always comes first.
std::vector<FeatureSpec> active_template() {
    using G = FeatureGroup;
    std::vector<FeatureSpec> specs;
    auto add = [&](std::string name, G group, double base, double load, double temp) {
        specs.push_back({std::move(name), group, false, base, load, temp});
    };
    add("pump1_current_ma", G::Electrical, 420.0, 0.01, 0.0);
    add("input_power_dbm", G::Optical, 0.0, 0.0, 0.0);
    add("housing_temp_c", G::Temperature, 0.0, 0.0, 1.0);
    add("pump2_current_ma", G::Electrical, 380.0, 0.01, 0.0);
    add("pump1_power_mw", G::Electrical, 180.0, 0.5, 0.0);
    add("pump1_chip_temp_c", G::Temperature, 25.0, 0.0, 0.6);
    add("pump3_current_ma", G::Electrical, 510.0, 0.01, 0.0);
    add("pump4_current_ma", G::Electrical, 470.0, 0.01, 0.0);
    add("pump1_current_monitor_ma", G::Electrical, 418.0, 0.01, 0.0);
    add("pump2_current_monitor_ma", G::Electrical, 379.0, 0.01, 0.0);
    add("pump3_current_monitor_ma", G::Electrical, 508.0, 0.01, 0.0);
    add("pump4_current_monitor_ma", G::Electrical, 468.0, 0.01, 0.0);
    add("pump1_current_setpoint_ma", G::Electrical, 420.0, 0.01, 0.0);
    add("pump2_current_setpoint_ma", G::Electrical, 380.0, 0.01, 0.0);
    add("pump3_current_setpoint_ma", G::Electrical, 510.0, 0.01, 0.0);
    add("pump4_current_setpoint_ma", G::Electrical, 470.0, 0.01, 0.0);
    add("pump1_current_peak_ma", G::Electrical, 431.0, 0.01, 0.0);
    add("pump2_current_peak_ma", G::Electrical, 390.0, 0.01, 0.0);
    add("pump3_current_peak_ma", G::Electrical, 523.0, 0.01, 0.0);
    add("pump4_current_peak_ma", G::Electrical, 482.0, 0.01, 0.0);
    add("pump1_current_avg_ma", G::Electrical, 419.0, 0.01, 0.0);
    add("pump2_current_avg_ma", G::Electrical, 379.0, 0.01, 0.0);
    add("pump3_current_avg_ma", G::Electrical, 509.0, 0.01, 0.0);
    add("pump4_current_avg_ma", G::Electrical, 469.0, 0.01, 0.0);
    add("pump_stage1_current_total_ma", G::Electrical, 800.0, 0.01, 0.0);
    add("pump_stage2_current_total_ma", G::Electrical, 980.0, 0.01, 0.0);
    add("pump_total_current_ma", G::Electrical, 1780.0, 0.01, 0.0);
    return specs;
}

std::vector<FeatureSpec> constant_template() {
    using G = FeatureGroup;
    std::vector<FeatureSpec> specs;
    auto add = [&](std::string name, G group, double value) {
        specs.push_back({std::move(name), group, true, value, 0.0, 0.0});
    };
    add("channel_count", G::Optical, 10.0);
    add("max_output_power_setpoint_dbm", G::Optical, 20.0);
    add("stage_count", G::Optical, 2.0);
    add("wavelength_band_start_nm", G::Optical, 1530.0);
    add("wavelength_band_end_nm", G::Optical, 1565.0);
    add("alarm_threshold_pump_current_ma", G::Electrical, 900.0);
    add("pump_count", G::Electrical, 4.0);
    add("supply_voltage_nominal_v", G::Electrical, 48.0);
    add("driver_voltage_limit_v", G::Electrical, 3.3);
    add("firmware_revision", G::Electrical, 7.0);
    add("hardware_revision", G::Electrical, 3.0);
    add("fan_mode", G::Electrical, 1.0);
    add("tec_setpoint_c", G::Temperature, 25.0);
    add("housing_temp_alarm_threshold_c", G::Temperature, 70.0);
    return specs;
}

struct OperatingPoint {
    double load;         // [0, 1]
    double temperature;  // deviation from ambient, degC
};

double nominal_value(const FeatureSpec& spec, const GeneratorConfig& c, const OperatingPoint& op) {
    if (spec.constant) return spec.base;
    switch (spec.group) {
        case FeatureGroup::Optical:
            return c.input_power_min_dbm + op.load * (c.input_power_max_dbm - c.input_power_min_dbm);
        case FeatureGroup::Temperature:
            return spec.base + spec.temperature_gain * op.temperature;
        case FeatureGroup::Electrical:
            return spec.base * (1.0 + spec.load_gain * (op.load - 0.5)) +
                   spec.temperature_gain * op.temperature;
    }
    return spec.base;
}

// Scale of the noise term: |value| at the mid operating point.
double noise_scale(const FeatureSpec& spec, const GeneratorConfig& c) {
    return std::abs(nominal_value(spec, c, OperatingPoint{0.5, 0.0}));
}

}  // namespace

std::vector<FeatureSpec> feature_catalogue(const GeneratorConfig& config) {
    config.validate();
    const auto active_count = static_cast<std::size_t>(config.features - config.constant_features);
    const auto constant_count = static_cast<std::size_t>(config.constant_features);

    std::vector<FeatureSpec> active = active_template();
    if (active_count <= active.size()) {
        active.resize(active_count);
    } else {
        for (std::size_t i = active.size(); i < active_count; ++i) {
            active.push_back({"aux_temp" + std::to_string(i - 26) + "_c", FeatureGroup::Temperature, false,
                              30.0, 0.0, 0.5});
        }
    }
    std::vector<FeatureSpec> constants = constant_template();
    if (constant_count <= constants.size()) {
        constants.resize(constant_count);
    } else {
        for (std::size_t i = constants.size(); i < constant_count; ++i) {
            constants.push_back({"reserved_register" + std::to_string(i - 13), FeatureGroup::Electrical, true,
                                 static_cast<double>(i), 0.0, 0.0});
        }
    }

    for (auto& spec : active) {
        if (spec.name == "housing_temp_c") spec.base = config.ambient_temperature_c;
    }
    for (auto& spec : constants) {
        if (spec.name == "max_output_power_setpoint_dbm") spec.base = config.max_output_power_dbm;
    }

    // Column order: optical, electrical, temperature; template order within a group.
    std::vector<FeatureSpec> all = active;
    all.insert(all.end(), constants.begin(), constants.end());
    std::stable_sort(all.begin(), all.end(), [](const FeatureSpec& a, const FeatureSpec& b) {
        return static_cast<int>(a.group) < static_cast<int>(b.group);
    });
    return all;
}

bool is_pump_current_feature(const std::string& name) {
    return name.rfind("pump", 0) == 0 && name.find("current") != std::string::npos;
}

std::vector<std::size_t> pump_current_columns(const FeatureMatrix& matrix) {
    std::vector<std::size_t> columns;
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        if (is_pump_current_feature(matrix.names()[j])) columns.push_back(j);
    }
    return columns;
}

namespace {

FeatureMatrix generate_rows(const GeneratorConfig& config, std::int64_t rows, std::mt19937_64& rng) {
    const auto specs = feature_catalogue(config);
    std::vector<std::string> names;
    names.reserve(specs.size());
    std::vector<double> scales;
    for (const auto& s : specs) {
        names.push_back(s.name);
        scales.push_back(noise_scale(s, config));
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix values(rows, static_cast<Eigen::Index>(specs.size()));
    for (Eigen::Index i = 0; i < rows; ++i) {
        OperatingPoint op{unit(rng), config.temperature_spread_c * gauss(rng)};
        for (std::size_t j = 0; j < specs.size(); ++j) {
            double v = nominal_value(specs[j], config, op);
            if (!specs[j].constant) v += config.noise * scales[j] * gauss(rng);
            values(i, static_cast<Eigen::Index>(j)) = v;
        }
    }
    return FeatureMatrix(std::move(names), std::move(values));
}

}  // namespace

FeatureMatrix generate_dataset(const GeneratorConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    return generate_rows(config, config.samples, rng);
}

InspectionStream generate_stream(const GeneratorConfig& base, const DriftSchedule& schedule,
                                 std::int64_t length, std::uint64_t seed) {
    if (length < 1) throw Error(ErrorKind::InvalidConfig, "stream length must be at least 1");
    if (!(schedule.degradation_rate >= 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "degradation rate must be non-negative");
    }
    if (schedule.degradation_rate > 1.0) {
        throw Error(ErrorKind::InvalidConfig, "degradation rate must not exceed 1");
    }
    if (schedule.onset_inspection < 0 || schedule.onset_inspection >= length) {
        throw Error(ErrorKind::InvalidConfig, "onset inspection must lie inside the stream");
    }
    base.validate();
    std::mt19937_64 rng(seed);
    InspectionStream stream;
    stream.schedule = schedule;
    stream.length = length;
    FeatureMatrix nominal = generate_rows(base, length, rng);
    for (std::int64_t t = 0; t < length; ++t) {
        const double d = schedule.drift_at(t, length);
        stream.drift.push_back(d);
        stream.ground_truth.push_back(d > 0.0);
    }
    stream.samples = inject_drift(nominal, stream.drift);
    return stream;
}

FeatureMatrix inject_drift(const FeatureMatrix& matrix, double ratio) {
    return inject_drift(matrix, std::vector<double>(matrix.rows(), ratio));
}

FeatureMatrix inject_drift(const FeatureMatrix& matrix, const std::vector<double>& ratios) {
    if (ratios.size() != matrix.rows()) throw Error(ErrorKind::Shape, "one drift ratio per row required");
    for (double r : ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw Error(ErrorKind::InvalidConfig, "drift ratio must be finite and non-negative");
        }
    }
    const auto columns = pump_current_columns(matrix);
    if (columns.empty()) throw Error(ErrorKind::MissingFeature, "matrix has no pump-current feature");
    FeatureMatrix out = matrix;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        if (ratios[i] == 0.0) continue;
        for (std::size_t j : columns) {
            out.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *= 1.0 + ratios[i];
        }
    }
    return out;
}

void write_csv(std::ostream& out, const FeatureMatrix& matrix) {
    const auto& names = matrix.names();
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (j) out << ',';
        out << names[j];
    }
    out << '\n';
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
        for (std::size_t j = 0; j < matrix.cols(); ++j) {
            if (j) out << ',';
            out << format_number(matrix.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_cell(const std::string& text) {
    if (text.empty() || text == "nan" || text == "NaN" || text == "NA") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::istringstream ss(text);
    ss.imbue(std::locale::classic());
    double v = 0.0;
    ss >> v;
    if (ss.fail() || !ss.eof()) throw Error(ErrorKind::InvalidData, "malformed CSV value '" + text + "'");
    return v;
}

}  // namespace

FeatureMatrix read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::InvalidData, "CSV input is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto names = split_csv_line(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != names.size()) {
            throw Error(ErrorKind::Shape, "CSV row " + std::to_string(rows.size() + 1) + " has " +
                                              std::to_string(fields.size()) + " fields, expected " +
                                              std::to_string(names.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_cell(f));
        rows.push_back(std::move(row));
    }
    Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return FeatureMatrix(std::move(names), std::move(values));
}

void write_csv_file(const std::string& path, const FeatureMatrix& matrix) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
    write_csv(out, matrix);
    if (!out) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

FeatureMatrix read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    return read_csv(in);
}

std::string to_string(DriftProfile profile) {
    return profile == DriftProfile::Step ? "step" : "linear_ramp";
}

DriftProfile drift_profile_from_string(const std::string& text) {
    if (text == "step") return DriftProfile::Step;
    if (text == "linear_ramp") return DriftProfile::LinearRamp;
    throw Error(ErrorKind::InvalidConfig, "unknown drift profile '" + text + "'");
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
    j = nlohmann::json{{"samples", c.samples},
                       {"features", c.features},
                       {"constant_features", c.constant_features},
                       {"noise", c.noise},
                       {"input_power_min_dbm", c.input_power_min_dbm},
                       {"input_power_max_dbm", c.input_power_max_dbm},
                       {"gain_min_db", c.gain_min_db},
                       {"gain_max_db", c.gain_max_db},
                       {"max_output_power_dbm", c.max_output_power_dbm},
                       {"ambient_temperature_c", c.ambient_temperature_c},
                       {"temperature_spread_c", c.temperature_spread_c}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
    GeneratorConfig d;
    c.samples = j.value("samples", d.samples);
    c.features = j.value("features", d.features);
    c.constant_features = j.value("constant_features", d.constant_features);
    c.noise = j.value("noise", d.noise);
    c.input_power_min_dbm = j.value("input_power_min_dbm", d.input_power_min_dbm);
    c.input_power_max_dbm = j.value("input_power_max_dbm", d.input_power_max_dbm);
    c.gain_min_db = j.value("gain_min_db", d.gain_min_db);
    c.gain_max_db = j.value("gain_max_db", d.gain_max_db);
    c.max_output_power_dbm = j.value("max_output_power_dbm", d.max_output_power_dbm);
    c.ambient_temperature_c = j.value("ambient_temperature_c", d.ambient_temperature_c);
    c.temperature_spread_c = j.value("temperature_spread_c", d.temperature_spread_c);
}

void to_json(nlohmann::json& j, const DriftSchedule& s) {
    j = nlohmann::json{{"degradation_rate", s.degradation_rate},
                       {"onset_inspection", s.onset_inspection},
                       {"profile", to_string(s.profile)}};
}

void from_json(const nlohmann::json& j, DriftSchedule& s) {
    s.degradation_rate = j.value("degradation_rate", 0.0);
    s.onset_inspection = j.value("onset_inspection", std::int64_t{0});
    s.profile = drift_profile_from_string(j.value("profile", std::string("linear_ramp")));
}

}  // namespace cdf
