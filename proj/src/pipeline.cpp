#include "cdf/pipeline.hpp"

#include "cdf/error.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

namespace cdf {

std::string to_string(CdfConfig config) {
    switch (config) {
        case CdfConfig::RAW: return "RAW";
        case CdfConfig::EA: return "EA";
        case CdfConfig::PCA: return "PCA";
        case CdfConfig::EA_PCA: return "EA_PCA";
    }
    return "unknown";
}

CdfConfig cdf_config_from_string(const std::string& text) {
    if (text == "RAW") return CdfConfig::RAW;
    if (text == "EA") return CdfConfig::EA;
    if (text == "PCA") return CdfConfig::PCA;
    if (text == "EA_PCA" || text == "EA+PCA" || text == "PCA+EA") return CdfConfig::EA_PCA;
    throw Error(ErrorKind::InvalidConfig, "unknown CDF configuration '" + text + "'");
}

bool uses_entropy(CdfConfig config) { return config == CdfConfig::EA || config == CdfConfig::EA_PCA; }
bool uses_pca(CdfConfig config) { return config == CdfConfig::PCA || config == CdfConfig::EA_PCA; }

namespace {

template <typename F>
auto in_stage(const char* stage, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("stage ") + stage + ": " + e.what());
    }
}

FeatureMatrix select_by_name(const FeatureMatrix& m, const std::vector<std::string>& names) {
    std::vector<std::size_t> columns;
    columns.reserve(names.size());
    for (const auto& name : names) {
        const long idx = m.index_of(name);
        if (idx < 0) throw Error(ErrorKind::MissingFeature, "input lacks feature '" + name + "'");
        columns.push_back(static_cast<std::size_t>(idx));
    }
    return m.select_columns(columns);
}

}  // namespace

FeatureMatrix FrontEnd::apply(const FeatureMatrix& raw) const {
    FeatureMatrix x = select_by_name(raw, kept);
    x = transform(scaler, x);
    if (entropy) x = select_by_name(x, entropy->selected);
    if (pca) x = project(*pca, x);
    return x;
}

std::size_t FrontEnd::output_dim() const {
    if (pca) return pca->output_dim();
    if (entropy) return entropy->selected.size();
    return kept.size();
}

FrontEnd fit_front_end(const FeatureMatrix& train_raw, CdfConfig config, const PipelineOptions& options) {
    FrontEnd front;
    front.config = config;
    FeatureMatrix x = in_stage("preprocess", [&] {
        auto [cleaned, report] = clean(train_raw, options.clean);
        front.kept = cleaned.names();
        front.clean_report = std::move(report);
        front.scaler = fit_scaler(cleaned);
        return transform(front.scaler, cleaned);
    });
    if (uses_entropy(config)) {
        x = in_stage("feature_select", [&] {
            auto [selected, report] = select_features(x, options.entropy_threshold, options.entropy_bins);
            front.entropy = std::move(report);
            return selected;
        });
    }
    if (uses_pca(config)) {
        x = in_stage("feature_extract", [&] {
            front.pca = fit_pca(x, options.pca_threshold);
            return project(*front.pca, x);
        });
    }
    return front;
}

MembershipMatrix PipelineModel::memberships(const FeatureMatrix& raw) const {
    return predict(cluster, front.apply(raw));
}

std::vector<int> PipelineModel::classify(const FeatureMatrix& raw) const {
    auto assign = memberships(raw).argmax();
    for (int& a : assign) a = mapping.apply(a) == 1 ? 1 : 0;
    return assign;
}

SplitIndices stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "train fraction must lie in (0, 1)");
    }
    std::vector<int> classes(labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::mt19937_64 rng(seed);
    SplitIndices split;
    for (int c : classes) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == c) idx.push_back(i);
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
        split.test.insert(split.test.end(), idx.begin() + static_cast<long>(n_train), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

LabeledSplit make_split(const FeatureMatrix& data, const std::vector<int>& labels, const SplitIndices& indices) {
    if (labels.size() != data.rows()) throw Error(ErrorKind::Shape, "one label per sample required");
    LabeledSplit split;
    split.train = data.select_rows(indices.train);
    split.test = data.select_rows(indices.test);
    for (auto i : indices.train) split.train_labels.push_back(labels[i]);
    for (auto i : indices.test) split.test_labels.push_back(labels[i]);
    return split;
}

namespace {

struct CellFit {
    PipelineModel model;
    TrainingTrace trace;
    double mse_train;
    double mse_test;
};

CellFit fit_cluster_stage(const FrontEnd& front, const FeatureMatrix& train_features,
                          const std::vector<int>& train_labels, const FeatureMatrix& test_features,
                          const std::vector<int>& test_labels, Algorithm algorithm, std::uint64_t seed,
                          const PipelineOptions& options) {
    FitResult fit = in_stage("clustering", [&] { return cluster_fit(algorithm, train_features, options.cluster, seed); });
    CellFit out;
    out.model.front = front;
    out.model.algorithm = algorithm;
    out.model.cluster = std::move(fit.model);
    out.model.split_seed = seed;
    out.model.seed = seed;
    out.model.mapping = best_label_mapping(fit.memberships.argmax(), train_labels, options.cluster.clusters);
    const auto& labels = out.model.mapping.label_of_cluster;
    const auto it = std::find(labels.begin(), labels.end(), 1);
    out.model.anomaly_cluster_index = it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
    out.mse_train = out.model.mapping.mse;
    out.mse_test = test_features.rows() == 0
                       ? 0.0
                       : mapped_mse(out.model.mapping, predict(out.model.cluster, test_features).argmax(), test_labels);
    out.trace = std::move(fit.trace);
    return out;
}

}  // namespace

PipelineFit fit_pipeline(const FeatureMatrix& data, const std::vector<int>& labels, CdfConfig config,
                         Algorithm algorithm, std::uint64_t seed, const PipelineOptions& options) {
    const auto split = make_split(data, labels, stratified_split(labels, options.train_fraction, seed));
    const FrontEnd front = fit_front_end(split.train, config, options);
    const FeatureMatrix train_features = front.apply(split.train);
    const FeatureMatrix test_features = front.apply(split.test);
    CellFit cell = fit_cluster_stage(front, train_features, split.train_labels, test_features, split.test_labels,
                                     algorithm, seed, options);
    PipelineFit out;
    out.model = std::move(cell.model);
    out.trace = std::move(cell.trace);
    out.mse_train = cell.mse_train;
    out.mse_test = cell.mse_test;
    return out;
}

const AblationCell& AblationTable::at(CdfConfig config, Algorithm algorithm) const {
    for (const auto& cell : cells) {
        if (cell.config == config && cell.algorithm == algorithm) return cell;
    }
    throw Error(ErrorKind::InvalidConfig, "ablation table has no cell " + to_string(config) + "/" +
                                              to_string(algorithm));
}

AblationTable run_ablation(const FeatureMatrix& data, const std::vector<int>& labels,
                           const std::vector<Algorithm>& algorithms, const std::vector<CdfConfig>& configs,
                           int runs, std::uint64_t base_seed, const PipelineOptions& options) {
    if (runs < 1) throw Error(ErrorKind::InvalidConfig, "runs must be at least 1");
    AblationTable table;
    table.runs = runs;
    table.base_seed = base_seed;
    for (CdfConfig c : configs) {
        for (Algorithm a : algorithms) table.cells.push_back(AblationCell{c, a, {}, 0, 0, 0, 0, 0, 0, {}});
    }
    for (int r = 0; r < runs; ++r) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
        const auto split = make_split(data, labels, stratified_split(labels, options.train_fraction, seed));
        for (CdfConfig c : configs) {
            const FrontEnd front = fit_front_end(split.train, c, options);
            const FeatureMatrix train_features = front.apply(split.train);
            const FeatureMatrix test_features = front.apply(split.test);
            for (Algorithm a : algorithms) {
                CellFit fit = fit_cluster_stage(front, train_features, split.train_labels, test_features,
                                                split.test_labels, a, seed, options);
                auto& cell = *std::find_if(table.cells.begin(), table.cells.end(),
                                           [&](const AblationCell& x) { return x.config == c && x.algorithm == a; });
                if (r == 0) cell.first_trace = fit.trace;
                cell.runs.push_back(RunResult{seed, fit.mse_train, fit.mse_test, fit.trace.iterations_used,
                                              fit.trace.converged});
            }
        }
    }
    for (auto& cell : table.cells) {
        std::vector<double> train;
        std::vector<double> test;
        double iterations = 0.0;
        for (const auto& run : cell.runs) {
            train.push_back(run.mse_train);
            test.push_back(run.mse_test);
            iterations += run.iterations;
            cell.converged_runs += run.converged ? 1 : 0;
        }
        std::tie(cell.mse_train_mean, cell.mse_train_std) = mean_std(train);
        std::tie(cell.mse_test_mean, cell.mse_test_std) = mean_std(test);
        cell.mean_iterations = iterations / static_cast<double>(cell.runs.size());
    }
    return table;
}

void to_json(nlohmann::json& j, const PipelineOptions& o) {
    j = nlohmann::json{{"irrelevant_features", o.clean.irrelevant},
                       {"entropy_threshold", o.entropy_threshold},
                       {"entropy_bins", o.entropy_bins},
                       {"pca_threshold", o.pca_threshold},
                       {"cluster", o.cluster},
                       {"train_fraction", o.train_fraction}};
}

void from_json(const nlohmann::json& j, PipelineOptions& o) {
    const PipelineOptions d;
    o.clean.irrelevant = j.value("irrelevant_features", std::vector<std::string>{});
    o.entropy_threshold = j.value("entropy_threshold", d.entropy_threshold);
    o.entropy_bins = j.value("entropy_bins", d.entropy_bins);
    o.pca_threshold = j.value("pca_threshold", d.pca_threshold);
    o.cluster = j.contains("cluster") ? j.at("cluster").get<ClusterConfig>() : d.cluster;
    o.train_fraction = j.value("train_fraction", d.train_fraction);
}

namespace {

nlohmann::json front_to_json(const FrontEnd& f) {
    nlohmann::json j{{"config", to_string(f.config)},
                     {"kept", f.kept},
                     {"dropped", f.clean_report},
                     {"scaler", f.scaler}};
    j["entropy"] = f.entropy ? nlohmann::json(*f.entropy) : nlohmann::json(nullptr);
    j["pca"] = f.pca ? nlohmann::json(*f.pca) : nlohmann::json(nullptr);
    return j;
}

FrontEnd front_from_json(const nlohmann::json& j) {
    FrontEnd f;
    f.config = cdf_config_from_string(j.at("config").get<std::string>());
    f.kept = j.at("kept").get<std::vector<std::string>>();
    for (const auto& d : j.at("dropped")) {
        const auto reason = d.at("reason").get<std::string>();
        f.clean_report.dropped.push_back(
            {d.at("name").get<std::string>(),
             reason == "duplicate" ? DropReason::Duplicate
                                   : (reason == "irrelevant" ? DropReason::Irrelevant : DropReason::AllMissing),
             d.value("duplicate_of", std::string{})});
    }
    f.scaler = j.at("scaler").get<ScalerModel>();
    if (!j.at("entropy").is_null()) f.entropy = j.at("entropy").get<EntropyReport>();
    if (!j.at("pca").is_null()) f.pca = j.at("pca").get<PcaModel>();
    if (uses_entropy(f.config) != f.entropy.has_value() || uses_pca(f.config) != f.pca.has_value()) {
        throw Error(ErrorKind::InvalidData, "pipeline stages do not match configuration " + to_string(f.config));
    }
    return f;
}

}  // namespace

void to_json(nlohmann::json& j, const PipelineModel& m) {
    j = nlohmann::json{{"format", "cdf-pipeline/1"},
                       {"front_end", front_to_json(m.front)},
                       {"algorithm", to_string(m.algorithm)},
                       {"cluster", m.cluster},
                       {"label_of_cluster", m.mapping.label_of_cluster},
                       {"mapping_mse", m.mapping.mse},
                       {"anomaly_cluster_index", m.anomaly_cluster_index},
                       {"split_seed", m.split_seed},
                       {"seed", m.seed}};
}

void from_json(const nlohmann::json& j, PipelineModel& m) {
    m.front = front_from_json(j.at("front_end"));
    m.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    m.cluster = j.at("cluster").get<ClusterModel>();
    m.mapping.label_of_cluster = j.at("label_of_cluster").get<std::vector<int>>();
    m.mapping.mse = j.at("mapping_mse").get<double>();
    m.anomaly_cluster_index = j.at("anomaly_cluster_index").get<int>();
    m.split_seed = j.at("split_seed").get<std::uint64_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (m.cluster.dim() != m.front.output_dim()) {
        throw Error(ErrorKind::Shape, "cluster dimension does not match the front-end output");
    }
}

void to_json(nlohmann::json& j, const AblationTable& t) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : t.cells) {
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& r : c.runs) {
            runs.push_back({{"seed", r.seed},
                            {"mse_train", r.mse_train},
                            {"mse_test", r.mse_test},
                            {"iterations", r.iterations},
                            {"converged", r.converged}});
        }
        cells.push_back({{"config", to_string(c.config)},
                         {"algorithm", to_string(c.algorithm)},
                         {"mse_train", c.mse_train_mean},
                         {"mse_train_std", c.mse_train_std},
                         {"mse_test", c.mse_test_mean},
                         {"std", c.mse_test_std},
                         {"mean_iterations", c.mean_iterations},
                         {"converged_runs", c.converged_runs},
                         {"runs", std::move(runs)}});
    }
    j = nlohmann::json{{"runs", t.runs}, {"base_seed", t.base_seed}, {"cells", std::move(cells)}};
}

void write_ablation_csv(std::ostream& out, const AblationTable& t) {
    out << "config,algorithm,mse_train,mse_test,std\n";
    for (const auto& c : t.cells) {
        out << to_string(c.config) << ',' << to_string(c.algorithm) << ',' << format_number(c.mse_train_mean) << ','
            << format_number(c.mse_test_mean) << ',' << format_number(c.mse_test_std) << '\n';
    }
}

}  // namespace cdf
