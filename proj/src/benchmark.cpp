#include "cdf/benchmark.hpp"

#include "cdf/error.hpp"
#include "cdf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace cdf {

LabeledDataset make_labeled_dataset(const LabeledDatasetConfig& config) {
    if (!(config.drift_fraction > 0.0 && config.drift_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "drift fraction must lie in (0, 1)");
    }
    if (!(config.drift_min > 0.0 && config.drift_min <= config.drift_max && config.drift_max <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "drift range must satisfy 0 < min <= max <= 1");
    }
    if (!(config.drift_tail_mean >= 0.0)) throw Error(ErrorKind::InvalidConfig, "drift tail mean must be >= 0");
    if (!(config.drift_tail_shape > 0.0)) throw Error(ErrorKind::InvalidConfig, "drift tail shape must be positive");

    LabeledDataset out;
    const FeatureMatrix nominal = generate_dataset(config.generator, config.seed);
    const std::size_t n = nominal.rows();
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto drifted = static_cast<std::size_t>(std::llround(config.drift_fraction * static_cast<double>(n)));

    out.labels.assign(n, 0);
    out.drift.assign(n, 0.0);
    std::gamma_distribution<double> tail(config.drift_tail_shape,
                                         config.drift_tail_mean > 0.0 ? config.drift_tail_mean / config.drift_tail_shape
                                                                      : 1.0);
    for (std::size_t i = 0; i < drifted; ++i) {
        const std::size_t row = order[i];
        const double excess = config.drift_tail_mean > 0.0 ? tail(rng) : 0.0;
        out.labels[row] = 1;
        out.drift[row] = std::min(config.drift_min + excess, config.drift_max);
    }
    out.data = inject_drift(nominal, out.drift);
    return out;
}

std::vector<double> default_cpd_grid() {
    std::vector<double> grid;
    for (int p = 1; p <= 15; ++p) grid.push_back(p / 100.0);
    return grid;
}

BenchmarkConfig::BenchmarkConfig() {
    dataset.generator.samples = 20000;
    dataset.generator.noise = 0.005;
    cpd.grid = default_cpd_grid();
}

ComparisonTable run_comparison(const BenchmarkConfig& config, const LabeledDataset& dataset) {
    const auto& settings = config.compare;
    if (settings.repeats < 1) throw Error(ErrorKind::InvalidConfig, "repeats must be at least 1");
    const Linkage linkage = linkage_from_string(settings.linkage);
    const std::vector<std::string> methods{"CDF (" + to_string(settings.cdf_algorithm) + ")", "KMeans",
                                           "Hierarchical", "BIRCH"};
    std::vector<std::vector<double>> train(methods.size());
    std::vector<std::vector<double>> test(methods.size());
    const int k = config.pipeline.cluster.clusters;

    for (int r = 0; r < settings.repeats; ++r) {
        const std::uint64_t seed = settings.base_seed + static_cast<std::uint64_t>(r);
        const auto split =
            make_split(dataset.data, dataset.labels, stratified_split(dataset.labels, config.pipeline.train_fraction, seed));
        const FrontEnd front = fit_front_end(split.train, settings.features, config.pipeline);
        const FeatureMatrix z_train = front.apply(split.train);
        const FeatureMatrix z_test = front.apply(split.test);

        const FitResult fit = cluster_fit(settings.cdf_algorithm, z_train, config.pipeline.cluster, seed);
        const auto mapping = best_label_mapping(fit.memberships.argmax(), split.train_labels, k);
        train[0].push_back(mapping.mse);
        test[0].push_back(mapped_mse(mapping, predict(fit.model, z_test).argmax(), split.test_labels));

        const std::vector<BaselineModel> models{
            kmeans_fit(z_train.values(), k, seed, settings.kmeans_max_iterations),
            agglomerative_fit(z_train.values(), k, linkage),
            birch_fit(z_train.values(), settings.birch_threshold, settings.birch_branching, k, seed)};
        for (std::size_t b = 0; b < models.size(); ++b) {
            const auto score = evaluate_baseline(models[b], z_test.values(), split.train_labels, split.test_labels);
            train[b + 1].push_back(score.mse_train);
            test[b + 1].push_back(score.mse_test);
        }
    }

    ComparisonTable table;
    table.repeats = settings.repeats;
    table.base_seed = settings.base_seed;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        ComparisonRow row;
        row.method = methods[m];
        std::tie(row.mse_train_mean, row.mse_train_std) = mean_std(train[m]);
        std::tie(row.mse_test_mean, row.mse_test_std) = mean_std(test[m]);
        row.mse_test_runs = test[m];
        table.rows.push_back(std::move(row));
    }
    return table;
}

PipelineModel stream_pipeline(const BenchmarkConfig& config, const LabeledDataset& dataset,
                              const StreamSettings& stream, Algorithm algorithm) {
    return fit_pipeline(dataset.data, dataset.labels, stream.config, algorithm, stream.pipeline_seed, config.pipeline)
        .model;
}

std::vector<CpdResult> run_cpd(const BenchmarkConfig& config, const LabeledDataset& dataset) {
    const auto& s = config.cpd.stream;
    const FeatureMatrix nominal =
        generate_stream(config.dataset.generator, DriftSchedule{}, s.length, s.stream_seed).samples;
    std::vector<CpdResult> out;
    for (Algorithm a : config.cpd.algorithms) {
        out.push_back(minimal_cpd(stream_pipeline(config, dataset, s, a), nominal, config.cpd.grid, s.window));
    }
    return out;
}

IdentificationReport run_detect(const BenchmarkConfig& config, const LabeledDataset& dataset) {
    const auto& d = config.detect;
    const PipelineModel model = stream_pipeline(config, dataset, d.stream, d.algorithm);
    return run_anomaly_identification(model, config.dataset.generator, d.rates, d.stream.length, d.stream.window,
                                      d.stream.stream_seed, d.profile, d.onset);
}

const ComparisonRow& ComparisonTable::row(const std::string& method) const {
    for (const auto& r : rows) {
        if (r.method == method) return r;
    }
    throw Error(ErrorKind::InvalidConfig, "no comparison row '" + method + "'");
}

void to_json(nlohmann::json& j, const ComparisonTable& t) {
    j = nlohmann::json{{"repeats", t.repeats}, {"base_seed", t.base_seed}, {"rows", nlohmann::json::array()}};
    for (const auto& r : t.rows) {
        j["rows"].push_back({{"method", r.method},
                             {"mse_train", r.mse_train_mean},
                             {"mse_train_std", r.mse_train_std},
                             {"mse_test", r.mse_test_mean},
                             {"mse_test_std", r.mse_test_std},
                             {"mse_test_runs", r.mse_test_runs}});
    }
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& t) {
    out << "method,mse_train,mse_test,std\n";
    for (const auto& r : t.rows) {
        out << r.method << ',' << format_number(r.mse_train_mean) << ',' << format_number(r.mse_test_mean) << ','
            << format_number(r.mse_test_std) << '\n';
    }
}

void write_cpd_csv(std::ostream& out, const std::vector<CpdResult>& results) {
    out << "algorithm,minimal_ratio,detected\n";
    for (const auto& r : results) {
        out << to_string(r.algorithm) << ',';
        if (r.minimal_ratio) out << format_number(*r.minimal_ratio);
        out << ',' << (r.detected() ? "true" : "false") << '\n';
    }
}

BenchmarkConfig load_benchmark(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open benchmark file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, "benchmark file '" + path + "': " + e.what());
    }
    return j.get<BenchmarkConfig>();
}

void to_json(nlohmann::json& j, const LabeledDatasetConfig& c) {
    j = nlohmann::json{{"generator", c.generator},
                       {"seed", c.seed},
                       {"drift_fraction", c.drift_fraction},
                       {"drift_min", c.drift_min},
                       {"drift_tail_mean", c.drift_tail_mean},
                       {"drift_tail_shape", c.drift_tail_shape},
                       {"drift_max", c.drift_max}};
}

void from_json(const nlohmann::json& j, LabeledDatasetConfig& c) {
    const LabeledDatasetConfig d;
    c.generator = j.contains("generator") ? j.at("generator").get<GeneratorConfig>() : d.generator;
    c.seed = j.value("seed", d.seed);
    c.drift_fraction = j.value("drift_fraction", d.drift_fraction);
    c.drift_min = j.value("drift_min", d.drift_min);
    c.drift_tail_mean = j.value("drift_tail_mean", d.drift_tail_mean);
    c.drift_tail_shape = j.value("drift_tail_shape", d.drift_tail_shape);
    c.drift_max = j.value("drift_max", d.drift_max);
}

namespace {

nlohmann::json stream_to_json(const StreamSettings& s) {
    return {{"length", s.length},
            {"window", s.window},
            {"stream_seed", s.stream_seed},
            {"pipeline_seed", s.pipeline_seed},
            {"config", to_string(s.config)}};
}

void stream_from_json(const nlohmann::json& j, StreamSettings& s) {
    const StreamSettings d;
    s.length = j.value("length", d.length);
    s.window = j.value("window", d.window);
    s.stream_seed = j.value("stream_seed", d.stream_seed);
    s.pipeline_seed = j.value("pipeline_seed", d.pipeline_seed);
    s.config = cdf_config_from_string(j.value("config", to_string(d.config)));
}

std::vector<std::string> algorithm_names(const std::vector<Algorithm>& algorithms) {
    std::vector<std::string> out;
    for (auto a : algorithms) out.push_back(to_string(a));
    return out;
}

}  // namespace

void to_json(nlohmann::json& j, const BenchmarkConfig& c) {
    j = nlohmann::json{
        {"dataset", c.dataset},
        {"pipeline", c.pipeline},
        {"ablation", {{"runs", c.ablation_runs}, {"base_seed", c.ablation_seed}}},
        {"compare",
         {{"repeats", c.compare.repeats},
          {"base_seed", c.compare.base_seed},
          {"features", to_string(c.compare.features)},
          {"cdf_algorithm", to_string(c.compare.cdf_algorithm)},
          {"birch_threshold", c.compare.birch_threshold},
          {"birch_branching", c.compare.birch_branching},
          {"linkage", c.compare.linkage},
          {"kmeans_max_iterations", c.compare.kmeans_max_iterations}}},
        {"cpd",
         {{"stream", stream_to_json(c.cpd.stream)},
          {"grid", c.cpd.grid},
          {"algorithms", algorithm_names(c.cpd.algorithms)}}},
        {"detect",
         {{"stream", stream_to_json(c.detect.stream)},
          {"rates", c.detect.rates},
          {"algorithm", to_string(c.detect.algorithm)},
          {"profile", to_string(c.detect.profile)},
          {"onset", c.detect.onset}}}};
}

void from_json(const nlohmann::json& j, BenchmarkConfig& c) {
    c = BenchmarkConfig{};
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<LabeledDatasetConfig>();
    if (j.contains("pipeline")) c.pipeline = j.at("pipeline").get<PipelineOptions>();
    if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        c.ablation_runs = a.value("runs", c.ablation_runs);
        c.ablation_seed = a.value("base_seed", c.ablation_seed);
    }
    if (j.contains("compare")) {
        const auto& s = j.at("compare");
        auto& o = c.compare;
        o.repeats = s.value("repeats", o.repeats);
        o.base_seed = s.value("base_seed", o.base_seed);
        o.features = cdf_config_from_string(s.value("features", to_string(o.features)));
        o.cdf_algorithm = algorithm_from_string(s.value("cdf_algorithm", to_string(o.cdf_algorithm)));
        o.birch_threshold = s.value("birch_threshold", o.birch_threshold);
        o.birch_branching = s.value("birch_branching", o.birch_branching);
        o.linkage = s.value("linkage", o.linkage);
        o.kmeans_max_iterations = s.value("kmeans_max_iterations", o.kmeans_max_iterations);
    }
    if (j.contains("cpd")) {
        const auto& s = j.at("cpd");
        if (s.contains("stream")) stream_from_json(s.at("stream"), c.cpd.stream);
        c.cpd.grid = s.value("grid", c.cpd.grid);
        if (s.contains("algorithms")) {
            c.cpd.algorithms.clear();
            for (const auto& a : s.at("algorithms")) c.cpd.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
        }
    }
    if (j.contains("detect")) {
        const auto& s = j.at("detect");
        if (s.contains("stream")) stream_from_json(s.at("stream"), c.detect.stream);
        c.detect.rates = s.value("rates", c.detect.rates);
        c.detect.algorithm = algorithm_from_string(s.value("algorithm", to_string(c.detect.algorithm)));
        c.detect.profile = drift_profile_from_string(s.value("profile", to_string(c.detect.profile)));
        c.detect.onset = s.value("onset", c.detect.onset);
    }
}

}  // namespace cdf
