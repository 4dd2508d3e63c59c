#include "cdf/benchmark.hpp"
#include "cdf/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cdf;

namespace {

constexpr const char* kOutputDirEnv = "CDF_OUTPUT_DIR";
constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < length; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

/// Collects the files written by one command.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    const fs::path& dir() const { return dir_; }

    fs::path path(const std::string& name) const { return dir_ / name; }

    std::ofstream open(const std::string& name) {
        const fs::path p = path(name);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
        names_.push_back(name);
        return out;
    }

    void json_file(const std::string& name, const json& value) { open(name) << value.dump(2) << '\n'; }

    template <class Writer>
    void csv_file(const std::string& name, Writer&& writer) {
        auto out = open(name);
        writer(out);
    }

    json hashes() const {
        json list = json::array();
        for (const auto& n : names_) list.push_back({{"path", n}, {"sha256", sha256_file(path(n))}});
        return list;
    }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

BenchmarkConfig config_from(const json& params) {
    BenchmarkConfig c;
    from_json(params.at("benchmark"), c);
    return c;
}

json input_entry(const std::string& path) {
    return {{"path", fs::absolute(path).string()}, {"sha256", sha256_file(path)}};
}

/// Splits a labeled CSV into features and the "label" column; "drift" is dropped.
std::pair<FeatureMatrix, std::optional<std::vector<int>>> read_labeled(const std::string& path) {
    const FeatureMatrix raw = read_csv_file(path);
    std::vector<std::size_t> keep;
    std::optional<std::vector<int>> labels;
    for (std::size_t c = 0; c < raw.cols(); ++c) {
        const std::string& name = raw.names()[c];
        if (name == "label") {
            std::vector<int> l(raw.rows());
            for (std::size_t r = 0; r < raw.rows(); ++r) {
                const double v = raw.values()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                if (v != 0.0 && v != 1.0) throw Error(ErrorKind::InvalidData, "label column must hold 0 or 1");
                l[r] = static_cast<int>(v);
            }
            labels = std::move(l);
        } else if (name != "drift") {
            keep.push_back(c);
        }
    }
    return {raw.select_columns(keep), std::move(labels)};
}

// ---- commands: params in, files out ----

json cmd_generate(const json& p, Outputs& out) {
    const std::string name = p.at("out");
    const bool labeled = p.at("labeled");
    FeatureMatrix table;
    json config;
    std::size_t constants = 0;
    if (labeled) {
        LabeledDatasetConfig dc = p.at("dataset");
        const LabeledDataset ds = make_labeled_dataset(dc);
        std::vector<std::string> names = ds.data.names();
        names.push_back("label");
        names.push_back("drift");
        Matrix values(ds.data.values().rows(), ds.data.values().cols() + 2);
        values.leftCols(ds.data.values().cols()) = ds.data.values();
        for (Eigen::Index r = 0; r < values.rows(); ++r) {
            values(r, values.cols() - 2) = ds.labels[static_cast<std::size_t>(r)];
            values(r, values.cols() - 1) = ds.drift[static_cast<std::size_t>(r)];
        }
        table = FeatureMatrix(std::move(names), std::move(values));
        config = dc;
        constants = static_cast<std::size_t>(dc.generator.constant_features);
    } else {
        GeneratorConfig gc = p.at("generator");
        table = generate_dataset(gc, p.at("seed").get<std::uint64_t>());
        config = {{"generator", gc}, {"seed", p.at("seed")}};
        constants = static_cast<std::size_t>(gc.constant_features);
    }
    out.csv_file(name, [&](std::ostream& s) { write_csv(s, table); });
    const std::string config_name = fs::path(name).replace_extension(".config.json").string();
    out.json_file(config_name, config);
    std::cout << "N=" << table.rows() << " n=" << (labeled ? table.cols() - 2 : table.cols())
              << " constant_features=" << constants << (labeled ? " labeled" : "") << '\n';
    return json::object();
}

json cmd_ablate(const json& p, Outputs& out) {
    const BenchmarkConfig cfg = config_from(p);
    std::vector<Algorithm> algorithms;
    for (const auto& a : p.at("algorithms")) algorithms.push_back(algorithm_from_string(a));
    std::vector<CdfConfig> configs;
    for (const auto& c : p.at("configs")) configs.push_back(cdf_config_from_string(c));
    const LabeledDataset ds = make_labeled_dataset(cfg.dataset);
    const AblationTable table = run_ablation(ds.data, ds.labels, algorithms, configs, cfg.ablation_runs,
                                             cfg.ablation_seed, cfg.pipeline);

    out.csv_file("ablation.csv", [&](std::ostream& s) { write_ablation_csv(s, table); });
    out.json_file("ablation.json", table);
    json traces = json::array();
    out.csv_file("traces.csv", [&](std::ostream& s) {
        s << "config,algorithm,iteration,error\n";
        for (const auto& c : table.cells) {
            for (std::size_t i = 0; i < c.first_trace.error.size(); ++i) {
                s << to_string(c.config) << ',' << to_string(c.algorithm) << ',' << i + 1 << ','
                  << format_number(c.first_trace.error[i]) << '\n';
            }
            traces.push_back({{"config", to_string(c.config)},
                              {"algorithm", to_string(c.algorithm)},
                              {"trace", c.first_trace}});
        }
    });
    out.json_file("traces.json", traces);
    for (const auto& c : table.cells) {
        std::cout << std::left << std::setw(8) << to_string(c.config) << std::setw(8) << to_string(c.algorithm)
                  << " mse_test=" << c.mse_test_mean << " std=" << c.mse_test_std
                  << " iterations=" << c.mean_iterations << '\n';
    }
    return json::object();
}

json cmd_compare(const json& p, Outputs& out) {
    const BenchmarkConfig cfg = config_from(p);
    const ComparisonTable table = run_comparison(cfg, make_labeled_dataset(cfg.dataset));
    out.csv_file("compare.csv", [&](std::ostream& s) { write_comparison_csv(s, table); });
    out.json_file("compare.json", table);
    for (const auto& r : table.rows) {
        std::cout << std::left << std::setw(14) << r.method << " mse_test=" << r.mse_test_mean
                  << " std=" << r.mse_test_std << '\n';
    }
    return json::object();
}

json cmd_cpd(const json& p, Outputs& out) {
    const BenchmarkConfig cfg = config_from(p);
    const std::vector<CpdResult> results = run_cpd(cfg, make_labeled_dataset(cfg.dataset));
    out.csv_file("cpd.csv", [&](std::ostream& s) { write_cpd_csv(s, results); });
    out.json_file("cpd.json", results);
    for (const auto& r : results) {
        std::cout << std::left << std::setw(8) << to_string(r.algorithm) << " minimal_ratio="
                  << (r.minimal_ratio ? std::to_string(*r.minimal_ratio) : std::string("none")) << '\n';
    }
    return json::object();
}

json cmd_detect(const json& p, Outputs& out) {
    const BenchmarkConfig cfg = config_from(p);
    const IdentificationReport report = run_detect(cfg, make_labeled_dataset(cfg.dataset));
    out.csv_file("detect_curves.csv", [&](std::ostream& s) { write_curves_csv(s, report); });
    out.json_file("detect_curves.json", report);
    json summary = json::array();
    out.csv_file("detect_summary.csv", [&](std::ostream& s) {
        s << "rate,transition_index,nok_count\n";
        for (const auto& st : report.streams) {
            s << format_number(st.rate) << ',';
            if (st.verdict.transition_index) s << *st.verdict.transition_index;
            s << ',' << st.verdict.nok_count() << '\n';
            summary.push_back({{"rate", st.rate},
                               {"transition_index", st.verdict.transition_index ? json(*st.verdict.transition_index)
                                                                                : json(nullptr)},
                               {"nok_count", st.verdict.nok_count()}});
        }
    });
    out.json_file("detect_summary.json", summary);
    for (const auto& s : summary) std::cout << s.dump() << '\n';
    return json::object();
}

json cmd_train(const json& p, Outputs& out) {
    const BenchmarkConfig cfg = config_from(p);
    const Algorithm algorithm = algorithm_from_string(p.at("algorithm"));
    const CdfConfig features = cdf_config_from_string(p.at("features"));
    const std::uint64_t seed = p.at("seed");
    json inputs = json::array();
    FeatureMatrix data;
    std::vector<int> labels;
    if (p.at("data").is_string()) {
        const std::string path = p.at("data");
        auto [x, l] = read_labeled(path);
        if (!l) throw Error(ErrorKind::InvalidData, path + " has no label column");
        data = std::move(x);
        labels = std::move(*l);
        inputs.push_back(input_entry(path));
    } else {
        LabeledDataset ds = make_labeled_dataset(cfg.dataset);
        data = std::move(ds.data);
        labels = std::move(ds.labels);
    }
    const PipelineFit fit = fit_pipeline(data, labels, features, algorithm, seed, cfg.pipeline);
    out.json_file("model.json", fit.model);
    const json summary{{"algorithm", to_string(algorithm)},
                       {"features", to_string(features)},
                       {"seed", seed},
                       {"mse_train", fit.mse_train},
                       {"mse_test", fit.mse_test},
                       {"iterations", fit.trace.iterations_used},
                       {"converged", fit.trace.converged},
                       {"output_dim", fit.model.front.output_dim()}};
    out.json_file("train_summary.json", summary);
    out.csv_file("train_summary.csv", [&](std::ostream& s) {
        s << "algorithm,features,seed,mse_train,mse_test,iterations,converged\n";
        s << to_string(algorithm) << ',' << to_string(features) << ',' << seed << ',' << format_number(fit.mse_train) << ','
          << format_number(fit.mse_test) << ',' << fit.trace.iterations_used << ',' << (fit.trace.converged ? "true" : "false")
          << '\n';
    });
    out.json_file("train_trace.json", fit.trace);
    out.csv_file("train_trace.csv", [&](std::ostream& s) { write_trace_csv(s, fit.trace); });
    std::cout << summary.dump() << '\n';
    return inputs;
}

json cmd_predict(const json& p, Outputs& out) {
    const std::string model_path = p.at("model");
    const std::string data_path = p.at("data");
    const int window = p.at("window");
    std::ifstream in(model_path);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + model_path);
    json mj;
    try {
        in >> mj;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidData, model_path + ": " + e.what());
    }
    const PipelineModel model = mj.get<PipelineModel>();
    const FeatureMatrix data = read_labeled(data_path).first;
    const DetectionVerdict verdict = classify_stream(model, data, window);
    out.csv_file("predictions.csv", [&](std::ostream& s) { write_verdict_csv(s, verdict); });
    out.json_file("predictions.json", verdict);
    std::cout << "inspections=" << verdict.size() << " nOK=" << verdict.nok_count() << " transition_index="
              << (verdict.transition_index ? std::to_string(*verdict.transition_index) : std::string("none")) << '\n';
    return json::array({input_entry(model_path), input_entry(data_path)});
}

json seeds_of(const std::string& command, const json& p) {
    if (command == "generate") {
        return p.at("labeled") ? json{{"dataset", p.at("dataset").at("seed")}} : json{{"generator", p.at("seed")}};
    }
    if (command == "predict") return json::object();
    const json& b = p.at("benchmark");
    json s{{"dataset", b.at("dataset").at("seed")}};
    if (command == "ablate") s["ablation_base"] = b.at("ablation").at("base_seed");
    if (command == "compare") s["compare_base"] = b.at("compare").at("base_seed");
    if (command == "cpd" || command == "detect") {
        s["stream"] = b.at(command).at("stream").at("stream_seed");
        s["pipeline"] = b.at(command).at("stream").at("pipeline_seed");
    }
    if (command == "train") s["train"] = p.at("seed");
    return s;
}

json dispatch(const std::string& command, const json& params, Outputs& out) {
    if (command == "generate") return cmd_generate(params, out);
    if (command == "ablate") return cmd_ablate(params, out);
    if (command == "compare") return cmd_compare(params, out);
    if (command == "cpd") return cmd_cpd(params, out);
    if (command == "detect") return cmd_detect(params, out);
    if (command == "train") return cmd_train(params, out);
    if (command == "predict") return cmd_predict(params, out);
    throw UsageError("unknown command " + command);
}

// ---- flag handling ----

struct Common {
    std::string config_path;
    std::string out_dir;
    std::string manifest;
};

struct Flags {
    // generate
    std::optional<std::int64_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise;
    std::optional<std::int64_t> features_total;
    std::optional<std::int64_t> constant_features;
    std::optional<std::string> out;
    bool labeled = false;
    // ablate
    std::optional<int> runs;
    std::vector<std::string> algorithms;
    std::vector<std::string> configs;
    // compare
    std::optional<int> repeats;
    std::optional<std::string> linkage;
    std::optional<double> birch_threshold;
    // cpd / detect
    std::vector<double> grid;
    std::vector<double> rates;
    std::optional<std::int64_t> length;
    std::optional<int> window;
    std::optional<std::uint64_t> stream_seed;
    std::optional<std::uint64_t> pipeline_seed;
    std::optional<std::string> algorithm;
    std::optional<std::string> profile;
    std::optional<std::int64_t> onset;
    // train / predict
    std::optional<std::string> feature_config;
    std::optional<std::string> data;
    std::optional<std::string> model;
};

BenchmarkConfig load_config(const Common& common) {
    return load_benchmark(common.config_path.empty() ? std::string(CDF_BENCHMARK_FILE) : common.config_path);
}

template <class T>
void set_if(T& target, const std::optional<T>& value) {
    if (value) target = *value;
}

void apply_stream(StreamSettings& s, const Flags& f) {
    set_if(s.length, f.length);
    set_if(s.window, f.window);
    set_if(s.stream_seed, f.stream_seed);
    set_if(s.pipeline_seed, f.pipeline_seed);
    if (f.feature_config) s.config = cdf_config_from_string(*f.feature_config);
}

json build_params(const std::string& command, const Common& common, const Flags& f) {
    json p;
    if (command == "generate") {
        if (!f.out) throw UsageError("generate requires --out");
        p["out"] = *f.out;
        p["labeled"] = f.labeled;
        auto apply_gen = [&](GeneratorConfig& g) {
            set_if(g.samples, f.samples);
            set_if(g.noise, f.noise);
            set_if(g.features, f.features_total);
            set_if(g.constant_features, f.constant_features);
        };
        if (f.labeled) {
            LabeledDatasetConfig d = load_config(common).dataset;
            apply_gen(d.generator);
            set_if(d.seed, f.seed);
            p["dataset"] = d;
        } else {
            GeneratorConfig g = common.config_path.empty() ? GeneratorConfig{} : load_config(common).dataset.generator;
            apply_gen(g);
            p["generator"] = g;
            p["seed"] = f.seed.value_or(0);
        }
        return p;
    }
    if (command == "predict") {
        if (!f.model || !f.data) throw UsageError("predict requires --model and --data");
        p["model"] = fs::absolute(*f.model).string();
        p["data"] = fs::absolute(*f.data).string();
        p["window"] = f.window.value_or(StreamSettings{}.window);
        return p;
    }

    BenchmarkConfig cfg = load_config(common);
    if (command == "ablate") {
        set_if(cfg.ablation_runs, f.runs);
        set_if(cfg.ablation_seed, f.seed);
        p["algorithms"] = f.algorithms.empty() ? std::vector<std::string>{"FCM", "ProbCP", "PossCP"} : f.algorithms;
        p["configs"] = f.configs.empty() ? std::vector<std::string>{"RAW", "EA", "PCA", "EA_PCA"} : f.configs;
    } else if (command == "compare") {
        set_if(cfg.compare.repeats, f.repeats);
        set_if(cfg.compare.base_seed, f.seed);
        set_if(cfg.compare.linkage, f.linkage);
        set_if(cfg.compare.birch_threshold, f.birch_threshold);
        if (f.algorithm) cfg.compare.cdf_algorithm = algorithm_from_string(*f.algorithm);
        if (f.feature_config) cfg.compare.features = cdf_config_from_string(*f.feature_config);
    } else if (command == "cpd") {
        apply_stream(cfg.cpd.stream, f);
        if (!f.grid.empty()) cfg.cpd.grid = f.grid;
        if (!f.algorithms.empty()) {
            cfg.cpd.algorithms.clear();
            for (const auto& a : f.algorithms) cfg.cpd.algorithms.push_back(algorithm_from_string(a));
        }
    } else if (command == "detect") {
        apply_stream(cfg.detect.stream, f);
        if (!f.rates.empty()) cfg.detect.rates = f.rates;
        if (f.algorithm) cfg.detect.algorithm = algorithm_from_string(*f.algorithm);
        if (f.profile) cfg.detect.profile = drift_profile_from_string(*f.profile);
        set_if(cfg.detect.onset, f.onset);
    } else if (command == "train") {
        p["algorithm"] = f.algorithm.value_or("PossCP");
        p["features"] = f.feature_config.value_or("EA_PCA");
        p["seed"] = f.seed.value_or(0);
        p["data"] = f.data ? json(fs::absolute(*f.data).string()) : json(nullptr);
    }
    p["benchmark"] = cfg;
    return p;
}

fs::path resolve_out_dir(const Common& common, const std::optional<json>& manifest) {
    if (!common.out_dir.empty()) return common.out_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    if (manifest && manifest->contains("output_dir")) return manifest->at("output_dir").get<std::string>();
    return ".";
}

json read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read manifest " + path);
    try {
        json m;
        in >> m;
        if (!m.contains("command") || !m.contains("params")) throw UsageError(path + " is not a run manifest");
        return m;
    } catch (const json::exception& e) {
        throw UsageError(path + ": " + e.what());
    }
}

/// Mismatched output hashes against a previous manifest, or none.
std::vector<std::string> compare_hashes(const json& expected, const json& actual) {
    std::vector<std::string> bad;
    for (const auto& e : expected) {
        bool found = false;
        for (const auto& a : actual) {
            if (a.at("path") == e.at("path")) {
                found = true;
                if (a.at("sha256") != e.at("sha256")) bad.push_back(e.at("path"));
            }
        }
        if (!found) bad.push_back(e.at("path").get<std::string>() + " (missing)");
    }
    return bad;
}

int run(const std::string& command, const Common& common, const Flags& flags) {
    std::optional<json> previous;
    json params;
    if (!common.manifest.empty()) {
        previous = read_manifest(common.manifest);
        if (previous->at("command") != command) {
            throw UsageError("manifest was written by '" + previous->at("command").get<std::string>() + "', not '" +
                             command + "'");
        }
        params = previous->at("params");
        if (previous->contains("inputs")) {
            for (const auto& in : previous->at("inputs")) {
                const std::string path = in.at("path");
                if (sha256_file(path) != in.at("sha256")) {
                    throw Error(ErrorKind::InvalidData, "input " + path + " changed since the manifest was written");
                }
            }
        }
    } else {
        params = build_params(command, common, flags);
    }

    const fs::path dir = resolve_out_dir(common, previous);
    fs::create_directories(dir);
    Outputs out(dir);
    const std::string started = utc_now();
    const json inputs = dispatch(command, params, out);
    const json hashes = out.hashes();

    json config_path = nullptr;
    if (previous) {
        config_path = previous->value("config_path", json(nullptr));
    } else if (!common.config_path.empty()) {
        config_path = fs::absolute(common.config_path).string();
    } else if (params.contains("benchmark") || params.contains("dataset")) {
        config_path = CDF_BENCHMARK_FILE;
    }

    json manifest{{"command", command},
                  {"version", kVersion},
                  {"config_path", config_path},
                  {"params", params},
                  {"seeds", seeds_of(command, params)},
                  {"started_at", started},
                  {"finished_at", utc_now()},
                  {"output_dir", fs::absolute(dir).lexically_normal().string()},
                  {"outputs", hashes},
                  {"inputs", inputs.is_array() ? inputs : json::array()}};
    if (previous) manifest["replayed_from"] = fs::absolute(common.manifest).string();

    int rc = 0;
    if (previous) {
        const auto bad = compare_hashes(previous->at("outputs"), hashes);
        if (bad.empty()) {
            std::cout << "reproduced: " << hashes.size() << " output hashes match\n";
        } else {
            for (const auto& b : bad) std::cerr << "hash mismatch: " << b << '\n';
            rc = 1;
        }
    }
    const fs::path manifest_path = dir / (command + ".manifest.json");
    std::ofstream(manifest_path) << manifest.dump(2) << '\n';
    std::cout << "manifest: " << manifest_path.string() << '\n';
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change detection framework for EDFA pump-current drift"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common common;
    Flags f;
    const std::vector<std::string> algorithm_names{"FCM", "ProbCP", "PossCP"};
    const std::vector<std::string> config_names{"RAW", "EA", "PCA", "EA_PCA"};

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "Benchmark JSON (default: bundled benchmark.json)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--out-dir", common.out_dir, std::string("Output directory (env ") + kOutputDirEnv + ")");
        cmd->add_option("--manifest", common.manifest, "Re-run from a manifest and verify output hashes")
            ->check(CLI::ExistingFile);
    };

    auto* gen = app.add_subcommand("generate", "Write a synthetic telemetry CSV");
    add_common(gen);
    gen->add_option("--out", f.out, "CSV file name, relative to the output directory");
    gen->add_option("--samples", f.samples)->check(CLI::PositiveNumber);
    gen->add_option("--seed", f.seed);
    gen->add_option("--noise", f.noise)->check(CLI::NonNegativeNumber);
    gen->add_option("--features", f.features_total)->check(CLI::PositiveNumber);
    gen->add_option("--constant-features", f.constant_features)->check(CLI::NonNegativeNumber);
    gen->add_flag("--labeled", f.labeled, "Nominal/drifted benchmark mixture with label and drift columns");

    auto* abl = app.add_subcommand("ablate", "CDF configuration x algorithm grid");
    add_common(abl);
    abl->add_option("--runs", f.runs)->check(CLI::PositiveNumber);
    abl->add_option("--seed", f.seed, "Base seed; run r uses seed + r");
    abl->add_option("--algorithms", f.algorithms)->check(CLI::IsMember(algorithm_names));
    abl->add_option("--configs", f.configs)->check(CLI::IsMember(config_names));

    auto* cmp = app.add_subcommand("compare", "CDF against K-Means, hierarchical and BIRCH");
    add_common(cmp);
    cmp->add_option("--repeats", f.repeats)->check(CLI::PositiveNumber);
    cmp->add_option("--seed", f.seed, "Base seed; repeat r uses seed + r");
    cmp->add_option("--linkage", f.linkage)->check(CLI::IsMember({"single", "complete", "average"}));
    cmp->add_option("--birch-threshold", f.birch_threshold)->check(CLI::PositiveNumber);
    cmp->add_option("--algorithm", f.algorithm)->check(CLI::IsMember(algorithm_names));
    cmp->add_option("--features", f.feature_config)->check(CLI::IsMember(config_names));

    auto add_stream = [&](CLI::App* cmd) {
        cmd->add_option("--length", f.length)->check(CLI::PositiveNumber);
        cmd->add_option("--window", f.window)->check(CLI::PositiveNumber);
        cmd->add_option("--stream-seed", f.stream_seed);
        cmd->add_option("--pipeline-seed", f.pipeline_seed);
        cmd->add_option("--features", f.feature_config)->check(CLI::IsMember(config_names));
    };

    auto* cpd = app.add_subcommand("cpd", "Minimal detectable drift per algorithm");
    add_common(cpd);
    add_stream(cpd);
    cpd->add_option("--grid", f.grid, "Drift ratios, ascending")->check(CLI::NonNegativeNumber);
    cpd->add_option("--algorithms", f.algorithms)->check(CLI::IsMember(algorithm_names));

    auto* det = app.add_subcommand("detect", "Streamed OK/nOK identification per degradation rate");
    add_common(det);
    add_stream(det);
    det->add_option("--rates", f.rates)->check(CLI::NonNegativeNumber);
    det->add_option("--algorithm", f.algorithm)->check(CLI::IsMember(algorithm_names));
    det->add_option("--profile", f.profile)->check(CLI::IsMember({"linear_ramp", "step"}));
    det->add_option("--onset", f.onset)->check(CLI::NonNegativeNumber);

    auto* trn = app.add_subcommand("train", "Fit a pipeline and write model.json");
    add_common(trn);
    trn->add_option("--algorithm", f.algorithm)->check(CLI::IsMember(algorithm_names));
    trn->add_option("--features", f.feature_config)->check(CLI::IsMember(config_names));
    trn->add_option("--seed", f.seed);
    trn->add_option("--data", f.data, "Labeled CSV (default: benchmark dataset)")->check(CLI::ExistingFile);

    auto* prd = app.add_subcommand("predict", "Classify a CSV of inspections with a trained model");
    add_common(prd);
    prd->add_option("--model", f.model)->check(CLI::ExistingFile);
    prd->add_option("--data", f.data)->check(CLI::ExistingFile);
    prd->add_option("--window", f.window)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, common, f);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
