#pragma once

#include "cdf/detection.hpp"
#include "cdf/pipeline.hpp"
#include "cdf/telemetry.hpp"

#include <json.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace cdf {

/// Nominal telemetry mixed with drifted samples; label 1 marks drift.
struct LabeledDataset {
    FeatureMatrix data;
    std::vector<int> labels;
    std::vector<double> drift;
};

/// Drifted samples carry ratio drift_min + Gamma(shape, mean drift_tail_mean), capped at drift_max.
struct LabeledDatasetConfig {
    GeneratorConfig generator;
    std::uint64_t seed = 11;
    double drift_fraction = 0.6;
    double drift_min = 0.02;
    double drift_tail_mean = 0.04;
    double drift_tail_shape = 6.0;
    double drift_max = 0.5;
};

LabeledDataset make_labeled_dataset(const LabeledDatasetConfig& config);

struct CompareSettings {
    int repeats = 20;
    std::uint64_t base_seed = 2000;
    CdfConfig features = CdfConfig::EA_PCA;   // front end shared by baselines and CDF
    Algorithm cdf_algorithm = Algorithm::PossCP;
    double birch_threshold = 0.5;
    int birch_branching = 50;
    std::string linkage = "average";
    int kmeans_max_iterations = 300;
};

struct StreamSettings {
    std::int64_t length = 150;
    int window = 40;
    std::uint64_t stream_seed = 77;
    std::uint64_t pipeline_seed = 5;
    CdfConfig config = CdfConfig::EA_PCA;
};

struct CpdSettings {
    StreamSettings stream;
    std::vector<double> grid;   // default 0.01 .. 0.15
    std::vector<Algorithm> algorithms{Algorithm::FCM, Algorithm::ProbCP, Algorithm::PossCP};
};

struct DetectSettings {
    StreamSettings stream;
    std::vector<double> rates{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    Algorithm algorithm = Algorithm::PossCP;
    DriftProfile profile = DriftProfile::LinearRamp;
    std::int64_t onset = 0;
};

/// Pinned synthetic benchmark shared by every experiment.
struct BenchmarkConfig {
    LabeledDatasetConfig dataset;
    PipelineOptions pipeline;
    int ablation_runs = 25;
    std::uint64_t ablation_seed = 1000;
    CompareSettings compare;
    CpdSettings cpd;
    DetectSettings detect;

    BenchmarkConfig();
};

std::vector<double> default_cpd_grid();

BenchmarkConfig load_benchmark(const std::string& path);

struct ComparisonRow {
    std::string method;
    double mse_train_mean = 0.0;
    double mse_train_std = 0.0;
    double mse_test_mean = 0.0;
    double mse_test_std = 0.0;
    std::vector<double> mse_test_runs;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;   // CDF first, then KMeans, Hierarchical, BIRCH
    int repeats = 0;
    std::uint64_t base_seed = 0;

    const ComparisonRow& row(const std::string& method) const;
};

/// Repeat r splits with base_seed + r; every method sees the same front-end output.
ComparisonTable run_comparison(const BenchmarkConfig& config, const LabeledDataset& dataset);

/// Pipeline used for streamed evaluation, fitted on the labeled benchmark with the stream's pipeline seed.
PipelineModel stream_pipeline(const BenchmarkConfig& config, const LabeledDataset& dataset,
                              const StreamSettings& stream, Algorithm algorithm);

/// Minimal detectable drift per algorithm on a nominal stream with drift injected on every inspection.
std::vector<CpdResult> run_cpd(const BenchmarkConfig& config, const LabeledDataset& dataset);

IdentificationReport run_detect(const BenchmarkConfig& config, const LabeledDataset& dataset);

void to_json(nlohmann::json& j, const ComparisonTable& t);
void write_comparison_csv(std::ostream& out, const ComparisonTable& t);
void write_cpd_csv(std::ostream& out, const std::vector<CpdResult>& results);

void to_json(nlohmann::json& j, const LabeledDatasetConfig& c);
void from_json(const nlohmann::json& j, LabeledDatasetConfig& c);
void to_json(nlohmann::json& j, const BenchmarkConfig& c);
void from_json(const nlohmann::json& j, BenchmarkConfig& c);

}  // namespace cdf
