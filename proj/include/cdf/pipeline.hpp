#pragma once

#include "cdf/clustering.hpp"
#include "cdf/feature_extract.hpp"
#include "cdf/feature_select.hpp"
#include "cdf/preprocess.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cdf {

/// Ablation configurations of the change detection framework.
enum class CdfConfig { RAW, EA, PCA, EA_PCA };

std::string to_string(CdfConfig config);
CdfConfig cdf_config_from_string(const std::string& text);
bool uses_entropy(CdfConfig config);
bool uses_pca(CdfConfig config);

struct PipelineOptions {
    CleanConfig clean;
    double entropy_threshold = 0.0;   // H_min
    int entropy_bins = 0;             // 0: ceil(sqrt(N_train))
    double pca_threshold = 0.95;
    ClusterConfig cluster;
    double train_fraction = 0.7;
};

/// Fitted preprocessing, selection and extraction stages.
struct FrontEnd {
    CdfConfig config = CdfConfig::EA_PCA;
    std::vector<std::string> kept;    // features surviving cleaning, in order
    CleanReport clean_report;
    ScalerModel scaler;
    std::optional<EntropyReport> entropy;
    std::optional<PcaModel> pca;

    /// Maps raw telemetry (columns looked up by name) to clustering features.
    FeatureMatrix apply(const FeatureMatrix& raw) const;
    std::size_t output_dim() const;
};

FrontEnd fit_front_end(const FeatureMatrix& train_raw, CdfConfig config, const PipelineOptions& options);

struct PipelineModel {
    FrontEnd front;
    Algorithm algorithm = Algorithm::PossCP;
    ClusterModel cluster;
    LabelMapping mapping;
    int anomaly_cluster_index = 0;
    std::uint64_t split_seed = 0;
    std::uint64_t seed = 0;

    MembershipMatrix memberships(const FeatureMatrix& raw) const;
    /// 1 where the sample's strongest cluster maps to the drifted label.
    std::vector<int> classify(const FeatureMatrix& raw) const;
};

struct PipelineFit {
    PipelineModel model;
    TrainingTrace trace;
    double mse_train = 0.0;
    double mse_test = 0.0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-class shuffle with `seed`; round(fraction * n_class) rows of each class go to train.
SplitIndices stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed);

LabeledSplit make_split(const FeatureMatrix& data, const std::vector<int>& labels, const SplitIndices& indices);

/// Fits every stage on the training split drawn with `seed`; clustering is seeded with `seed` as well.
PipelineFit fit_pipeline(const FeatureMatrix& data, const std::vector<int>& labels, CdfConfig config,
                         Algorithm algorithm, std::uint64_t seed, const PipelineOptions& options = {});

struct AblationCell {
    CdfConfig config = CdfConfig::RAW;
    Algorithm algorithm = Algorithm::FCM;
    std::vector<RunResult> runs;
    double mse_train_mean = 0.0;
    double mse_train_std = 0.0;
    double mse_test_mean = 0.0;
    double mse_test_std = 0.0;
    double mean_iterations = 0.0;
    int converged_runs = 0;
    TrainingTrace first_trace;
};

struct AblationTable {
    std::vector<AblationCell> cells;
    int runs = 0;
    std::uint64_t base_seed = 0;

    const AblationCell& at(CdfConfig config, Algorithm algorithm) const;
};

/// runs x configs x algorithms fits. Run r uses seed base_seed + r for the split and
/// the cluster initialization; all algorithms of a run share the fitted front end.
AblationTable run_ablation(const FeatureMatrix& data, const std::vector<int>& labels,
                           const std::vector<Algorithm>& algorithms, const std::vector<CdfConfig>& configs,
                           int runs, std::uint64_t base_seed, const PipelineOptions& options = {});

void to_json(nlohmann::json& j, const PipelineOptions& o);
void from_json(const nlohmann::json& j, PipelineOptions& o);
void to_json(nlohmann::json& j, const PipelineModel& m);
void from_json(const nlohmann::json& j, PipelineModel& m);
void to_json(nlohmann::json& j, const AblationTable& t);
void write_ablation_csv(std::ostream& out, const AblationTable& t);

}  // namespace cdf
