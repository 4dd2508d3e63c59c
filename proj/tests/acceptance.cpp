// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "cdf/benchmark.hpp"
#include "cdf/error.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cdf;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

const BenchmarkConfig& benchmark() {
    static const BenchmarkConfig cfg = load_benchmark(CDF_BENCHMARK_FILE);
    return cfg;
}

const LabeledDataset& dataset() {
    static const LabeledDataset ds = make_labeled_dataset(benchmark().dataset);
    return ds;
}

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

// ---- 1 ----
Outcome weight_normalization() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> fuzz(1.1, 3.0);
    std::uniform_real_distribution<double> scale(0.5, 2.0);
    std::uniform_real_distribution<double> spread(0.01, 10.0);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_int_distribution<int> clusters(2, 6);
    double worst_sum = 0.0;
    double min_poss = 1.0;
    double max_poss = 0.0;
    for (int draw = 0; draw < 10000; ++draw) {
        const int d = dim(rng);
        const int m = clusters(rng);
        ClusterModel model;
        model.centers = Matrix(m, d);
        for (Eigen::Index i = 0; i < model.centers.size(); ++i) model.centers.data()[i] = coord(rng);
        model.fuzzifier = fuzz(rng);
        model.scale = Vector::Constant(d, scale(rng));
        model.spread = Vector(m);
        for (int j = 0; j < m; ++j) model.spread(j) = spread(rng);
        Matrix x(1, d);
        for (int i = 0; i < d; ++i) x(0, i) = coord(rng);
        if (draw % 20 == 0) x.row(0) = model.centers.row(0);
        for (Algorithm a : {Algorithm::FCM, Algorithm::ProbCP, Algorithm::PossCP}) {
            model.algorithm = a;
            const Matrix w = predict(model, x).weights;
            if (!w.allFinite()) return {false, "non-finite weight at draw " + std::to_string(draw)};
            if (a == Algorithm::PossCP) {
                min_poss = std::min(min_poss, w.minCoeff());
                max_poss = std::max(max_poss, w.maxCoeff());
            } else {
                worst_sum = std::max(worst_sum, std::abs(w.sum() - 1.0));
            }
        }
    }
    const bool ok = worst_sum <= 1e-9 && min_poss > 0.0 && max_poss <= 1.0;
    return {ok, "max |row sum - 1| = " + fmt(worst_sum, 3) + ", PossCP range [" + fmt(min_poss, 3) + ", " +
                    fmt(max_poss, 3) + "]"};
}

// ---- 2 ----
Outcome distance_oracle() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> scale(0.5, 3.0);
    std::uniform_int_distribution<int> dim(1, 10);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = dim(rng);
        std::vector<double> x(d), c(d), beta(d);
        double direct = 0.0;
        for (int i = 0; i < d; ++i) {
            x[i] = coord(rng);
            c[i] = coord(rng);
            beta[i] = scale(rng);
            direct += beta[i] * std::log(std::cosh((x[i] - c[i]) / beta[i]));
        }
        worst = std::max(worst, std::abs(robust_distance(x, c, beta) - direct));
    }
    std::uniform_real_distribution<double> big(20.0, 500.0);
    double worst_tail = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double t = (trial % 2 ? 1.0 : -1.0) * big(rng);
        const std::vector<double> x{t};
        const std::vector<double> zero{0.0};
        const std::vector<double> one{1.0};
        worst_tail = std::max(worst_tail, std::abs(robust_distance(x, zero, one) - (std::abs(t) - std::log(2.0))));
    }
    return {worst < 1e-12 && worst_tail < 1e-8,
            "max oracle error " + fmt(worst, 3) + ", max asymptote error " + fmt(worst_tail, 3)};
}

// ---- 3 ----
Outcome gradient_check() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    std::uniform_real_distribution<double> scale(0.5, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const int d = 3;
        std::vector<double> x(d), c(d), beta(d);
        for (int i = 0; i < d; ++i) {
            x[i] = coord(rng);
            c[i] = coord(rng);
            beta[i] = scale(rng);
        }
        const Vector dir = robust_descent_direction(x, c, beta);
        Vector fd(d);
        const double h = 1e-6;
        for (int i = 0; i < d; ++i) {
            auto cp = c, cm = c;
            cp[i] += h;
            cm[i] -= h;
            fd(i) = -(robust_distance(x, cp, beta) - robust_distance(x, cm, beta)) / (2.0 * h);
        }
        worst = std::max(worst, (dir - fd).norm() / fd.norm());
    }
    return {worst < 1e-5, "max relative error " + fmt(worst, 3)};
}

// ---- 4 ----
Matrix fcm_fixed_point(const Matrix& x, Matrix c, double beta) {
    for (int it = 0; it < 20000; ++it) {
        Matrix u(x.rows(), c.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            Eigen::Index hit = -1;
            for (Eigen::Index j = 0; j < c.rows() && hit < 0; ++j) {
                if ((x.row(i) - c.row(j)).squaredNorm() == 0.0) hit = j;
            }
            if (hit >= 0) {
                u.row(i).setZero();
                u(i, hit) = 1.0;
                continue;
            }
            for (Eigen::Index j = 0; j < c.rows(); ++j) {
                double s = 0.0;
                for (Eigen::Index k = 0; k < c.rows(); ++k) {
                    s += std::pow((x.row(i) - c.row(j)).norm() / (x.row(i) - c.row(k)).norm(), 2.0 / (beta - 1.0));
                }
                u(i, j) = 1.0 / s;
            }
        }
        Matrix next(c.rows(), c.cols());
        for (Eigen::Index j = 0; j < c.rows(); ++j) {
            const Vector ub = u.col(j).array().pow(beta);
            next.row(j) = ub.transpose() * x / ub.sum();
        }
        const double change = (next - c).norm();
        c = next;
        if (change < 1e-15) break;
    }
    return c;
}

Outcome fcm_oracle() {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_int_distribution<int> rows(3, 12);
    std::uniform_int_distribution<int> dims(1, 3);
    ClusterConfig config;
    config.epsilon = 1e-13;
    config.max_iterations = 20000;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rows(rng);
        const int d = dims(rng);
        Matrix x(n, d);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = coord(rng);
        const Matrix init = sample_initial_centers(x, 2, static_cast<std::uint64_t>(trial));
        std::vector<std::string> names;
        for (int i = 0; i < d; ++i) names.push_back("x" + std::to_string(i));
        const FitResult fit = cluster_fit_from(Algorithm::FCM, FeatureMatrix(names, x), config, init);
        worst = std::max(worst, (fit.model.centers - fcm_fixed_point(x, init, config.fuzzifier)).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-6, "max center difference " + fmt(worst, 3)};
}

// ---- 5 ----
Outcome convergence() {
    const auto& cfg = benchmark();
    std::string detail;
    bool ok = true;
    for (Algorithm a : {Algorithm::FCM, Algorithm::ProbCP, Algorithm::PossCP}) {
        const PipelineFit fit =
            fit_pipeline(dataset().data, dataset().labels, CdfConfig::EA_PCA, a, cfg.ablation_seed, cfg.pipeline);
        const bool good = fit.trace.converged && fit.trace.iterations_used <= 30 &&
                          fit.trace.error.back() <= cfg.pipeline.cluster.epsilon;
        ok = ok && good;
        detail += (detail.empty() ? "" : ", ") + to_string(a) + " " + std::to_string(fit.trace.iterations_used) +
                  " it (final dW " + fmt(fit.trace.error.back(), 3) + ")";
    }
    return {ok, detail};
}

// ---- 6 ----
bool at_least(const AblationCell& a, const AblationCell& b) {
    return a.mse_test_mean >= b.mse_test_mean - std::max(a.mse_test_std, b.mse_test_std);
}

Outcome ablation_ordering() {
    const auto& cfg = benchmark();
    const std::vector<Algorithm> algs{Algorithm::FCM, Algorithm::ProbCP, Algorithm::PossCP};
    const std::vector<CdfConfig> configs{CdfConfig::RAW, CdfConfig::EA, CdfConfig::PCA, CdfConfig::EA_PCA};
    const AblationTable t =
        run_ablation(dataset().data, dataset().labels, algs, configs, cfg.ablation_runs, cfg.ablation_seed, cfg.pipeline);
    bool ok = t.runs == 25;
    std::string broken;
    for (Algorithm a : algs) {
        for (std::size_t i = 0; i + 1 < configs.size(); ++i) {
            if (!at_least(t.at(configs[i], a), t.at(configs[i + 1], a))) {
                ok = false;
                broken += " " + to_string(a) + ":" + to_string(configs[i]) + "<" + to_string(configs[i + 1]);
            }
        }
    }
    for (std::size_t i = 0; i + 1 < algs.size(); ++i) {
        if (!at_least(t.at(CdfConfig::EA_PCA, algs[i]), t.at(CdfConfig::EA_PCA, algs[i + 1]))) {
            ok = false;
            broken += " EA_PCA:" + to_string(algs[i]) + "<" + to_string(algs[i + 1]);
        }
    }
    std::string detail = "MSE_test";
    for (CdfConfig c : configs) {
        detail += " " + to_string(c) + "[";
        for (Algorithm a : algs) detail += (a == Algorithm::FCM ? "" : " ") + fmt(t.at(c, a).mse_test_mean);
        detail += "]";
    }
    if (!broken.empty()) detail += " violated:" + broken;
    return {ok, detail};
}

// ---- 7 ----
Outcome baseline_ordering() {
    const ComparisonTable t = run_comparison(benchmark(), dataset());
    const ComparisonRow& cdf_row = t.rows.front();
    bool ok = t.repeats == 20 && cdf_row.method == "CDF (PossCP)";
    std::string detail = cdf_row.method + " " + fmt(cdf_row.mse_test_mean);
    for (const std::string name : {"KMeans", "Hierarchical", "BIRCH"}) {
        const ComparisonRow& r = t.row(name);
        ok = ok && cdf_row.mse_test_mean < r.mse_test_mean;
        detail += ", " + name + " " + fmt(r.mse_test_mean);
    }
    return {ok, detail};
}

// ---- 8 ----
Outcome cpd_ordering() {
    const auto results = run_cpd(benchmark(), dataset());
    std::optional<double> fcm, prob, poss;
    std::string detail;
    for (const auto& r : results) {
        detail += (detail.empty() ? "" : ", ") + to_string(r.algorithm) + " " +
                  (r.minimal_ratio ? fmt(100.0 * *r.minimal_ratio) + "%" : "none");
        if (r.algorithm == Algorithm::FCM) fcm = r.minimal_ratio;
        if (r.algorithm == Algorithm::ProbCP) prob = r.minimal_ratio;
        if (r.algorithm == Algorithm::PossCP) poss = r.minimal_ratio;
    }
    const bool ok = fcm && prob && poss && *poss <= *prob && *prob <= *fcm && *fcm < 0.10 && *prob < 0.10 &&
                    *poss < 0.10;
    return {ok, detail};
}

// ---- 9 ----
Outcome streamed_identification() {
    const auto& cfg = benchmark();
    const IdentificationReport r = run_detect(cfg, dataset());
    bool ok = r.length == 150 && r.window == 40 && cfg.detect.rates == std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    std::string detail = "transition index by rate:";
    std::optional<std::int64_t> previous;
    for (const auto& s : r.streams) {
        const auto& t = s.verdict.transition_index;
        detail += " " + fmt(100.0 * s.rate) + "%=" + (t ? std::to_string(*t) : std::string("-"));
        if (s.rate == 0.0) {
            ok = ok && !t && s.verdict.nok_count() == 0;
            continue;
        }
        ok = ok && t.has_value();
        if (t && previous) ok = ok && *t <= *previous;
        if (t) previous = t;
    }
    return {ok, detail};
}

// ---- 10 ----
Outcome entropy_selection() {
    const auto& cfg = benchmark();
    const FeatureMatrix& data = dataset().data;
    int constant = 0;
    for (Eigen::Index j = 0; j < data.values().cols(); ++j) {
        if (data.values().col(j).maxCoeff() == data.values().col(j).minCoeff()) ++constant;
    }
    const FrontEnd front = fit_front_end(data, CdfConfig::EA, cfg.pipeline);
    const std::size_t kept = front.entropy->selected.size();
    const bool ok = data.cols() == 41 && constant == 14 && cfg.pipeline.entropy_threshold == 0.0 && kept == 27;
    return {ok, std::to_string(kept) + " of " + std::to_string(data.cols()) + " features survive H_min = 0 (" +
                    std::to_string(constant) + " constant)"};
}

// ---- 11 ----
Outcome pca_threshold() {
    const auto& cfg = benchmark();
    const FrontEnd front = fit_front_end(dataset().data, CdfConfig::EA, cfg.pipeline);
    const FeatureMatrix ea = front.apply(dataset().data);
    const PcaModel pca = fit_pca(ea, cfg.pipeline.pca_threshold);
    const Matrix c = covariance(ea.values());
    double residual = 0.0;
    for (Eigen::Index i = 0; i < pca.components.rows(); ++i) {
        const Vector v = pca.components.row(i).transpose();
        residual = std::max(residual, (c * v - pca.eigenvalues(i) * v).norm());
    }
    std::string ratios;
    double cum = 0.0;
    for (Eigen::Index i = 0; i < pca.explained_variance_ratio.size(); ++i) {
        cum += pca.explained_variance_ratio(i);
        ratios += (i ? "/" : "") + fmt(cum, 4);
    }
    return {pca.output_dim() == 3 && residual < 1e-8,
            "k = " + std::to_string(pca.output_dim()) + " (cumulative " + ratios + "), max residual " + fmt(residual, 3)};
}

// ---- 12 ----
int run_cli(const std::string& args) {
    const std::string cmd = std::string(CDF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome reproducibility() {
    const fs::path root = fs::absolute("acceptance_cli");
    fs::remove_all(root);
    fs::create_directories(root);
    const auto dir = [&](const std::string& name) { return " --out-dir " + (root / name).string(); };
    const std::string model = (root / "train" / "model.json").string();
    const std::string nominal = (root / "generate" / "nominal.csv").string();
    const std::vector<std::pair<std::string, std::string>> commands{
        {"generate", "generate --samples 1000 --seed 7 --out nominal.csv"},
        {"ablate", "ablate --runs 2 --configs EA_PCA"},
        {"compare", "compare --repeats 1"},
        {"cpd", "cpd"},
        {"detect", "detect"},
        {"train", "train --seed 5"},
        {"predict", "predict --model " + model + " --data " + nominal},
    };
    bool ok = true;
    int files = 0;
    std::string failed;
    for (const auto& [name, args] : commands) {
        if (run_cli(args + dir(name)) != 0) {
            ok = false;
            failed += " " + name + "(run)";
            continue;
        }
        const fs::path manifest = root / name / (name + ".manifest.json");
        if (run_cli(name + " --manifest " + manifest.string() + dir(name + "_replay")) != 0) {
            ok = false;
            failed += " " + name + "(replay)";
            continue;
        }
        const auto first = nlohmann::json::parse(file_bytes(manifest));
        const auto second = nlohmann::json::parse(file_bytes(root / (name + "_replay") / (name + ".manifest.json")));
        if (first.at("outputs") != second.at("outputs")) {
            ok = false;
            failed += " " + name + "(hash)";
        }
        for (const auto& out : first.at("outputs")) {
            const std::string rel = out.at("path");
            if (file_bytes(root / name / rel) != file_bytes(root / (name + "_replay") / rel)) {
                ok = false;
                failed += " " + name + ":" + rel;
            }
            ++files;
        }
    }
    return {ok, std::to_string(commands.size()) + " commands, " + std::to_string(files) +
                    " output files re-created bit-identically from manifests" +
                    (failed.empty() ? "" : "; failed:" + failed)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        std::string name;
        double limit_seconds;  // 0 = no runtime bound
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria{
        {1, "Weight normalization", 5, weight_normalization},
        {2, "Robust distance oracle", 0, distance_oracle},
        {3, "Gradient check", 0, gradient_check},
        {4, "FCM oracle equivalence", 0, fcm_oracle},
        {5, "Convergence within 30 iterations", 60, convergence},
        {6, "Ablation ordering", 600, ablation_ordering},
        {7, "Baseline ordering", 600, baseline_ordering},
        {8, "CPD ordering and bound", 0, cpd_ordering},
        {9, "Streamed identification", 60, streamed_identification},
        {10, "Entropy selection", 0, entropy_selection},
        {11, "PCA threshold", 0, pca_threshold},
        {12, "Reproducibility from manifest", 0, reproducibility},
    };

    // Benchmark data is shared; build it outside the timed sections.
    dataset();

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_seconds > 0 && seconds >= c.limit_seconds) {
            o.pass = false;
            o.detail += " [runtime limit " + fmt(c.limit_seconds) + " s exceeded]";
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << c.id << "  " << c.name << ": " << o.detail
                  << " (" << std::fixed << std::setprecision(2) << seconds << " s)" << std::defaultfloat << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " acceptance criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
