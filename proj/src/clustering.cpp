#include "cdf/clustering.hpp"

#include "cdf/error.hpp"
#include "cdf/json_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

namespace cdf {

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::FCM: return "FCM";
        case Algorithm::ProbCP: return "ProbCP";
        case Algorithm::PossCP: return "PossCP";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string& text) {
    if (text == "FCM" || text == "fcm") return Algorithm::FCM;
    if (text == "ProbCP" || text == "probcp") return Algorithm::ProbCP;
    if (text == "PossCP" || text == "posscp") return Algorithm::PossCP;
    throw Error(ErrorKind::InvalidConfig, "unknown clustering algorithm '" + text + "'");
}

void ClusterConfig::validate() const {
    if (clusters < 2) throw Error(ErrorKind::InvalidConfig, "at least 2 clusters required");
    if (!(fuzzifier > 1.0)) throw Error(ErrorKind::InvalidConfig, "fuzzifier must exceed 1");
    if (!(scale > 0.0)) throw Error(ErrorKind::InvalidConfig, "distance scale must be positive");
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning rate must be positive");
    if (!(learning_rate_decay >= 0.0)) throw Error(ErrorKind::InvalidConfig, "learning rate decay must be >= 0");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidConfig, "epsilon must be positive");
    if (max_iterations < 1) throw Error(ErrorKind::InvalidConfig, "max_iterations must be at least 1");
}

std::vector<int> MembershipMatrix::argmax() const {
    std::vector<int> out(rows());
    for (Eigen::Index i = 0; i < weights.rows(); ++i) {
        Eigen::Index arg = 0;
        weights.row(i).maxCoeff(&arg);
        out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return out;
}

double log_cosh(double t) {
    const double a = std::abs(t);
    if (a < 1.0) {
        // cosh t = 1 + 2 sinh^2(t/2) keeps precision near zero.
        const double s = std::sinh(0.5 * a);
        return std::log1p(2.0 * s * s);
    }
    return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double robust_distance(std::span<const double> x, std::span<const double> c, std::span<const double> beta) {
    if (x.size() != c.size() || x.size() != beta.size()) {
        throw Error(ErrorKind::Shape, "robust distance operands differ in dimension");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(beta[i] > 0.0)) throw Error(ErrorKind::InvalidConfig, "distance scale entries must be positive");
        d += beta[i] * log_cosh((x[i] - c[i]) / beta[i]);
    }
    return d;
}

Vector normalized_weights(std::span<const double> distances, double exponent) {
    const auto m = static_cast<Eigen::Index>(distances.size());
    Vector w = Vector::Zero(m);
    const auto zeros = std::count(distances.begin(), distances.end(), 0.0);
    if (zeros > 0) {
        for (Eigen::Index j = 0; j < m; ++j) {
            if (distances[static_cast<std::size_t>(j)] == 0.0) w(j) = 1.0 / static_cast<double>(zeros);
        }
        return w;
    }
    const double smallest = *std::min_element(distances.begin(), distances.end());
    for (Eigen::Index j = 0; j < m; ++j) {
        w(j) = std::pow(distances[static_cast<std::size_t>(j)] / smallest, exponent);
    }
    return w / w.sum();
}

double possibilistic_weight(double distance, double spread, double fuzzifier) {
    return 1.0 / (1.0 + std::pow(distance / spread, 1.0 / (fuzzifier - 1.0)));
}

namespace {

double squared_euclidean(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                         const Eigen::Ref<const Eigen::RowVectorXd>& c) {
    return (x - c).squaredNorm();
}

Eigen::RowVectorXd descent_row(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                               const Eigen::Ref<const Eigen::RowVectorXd>& c, const Eigen::RowVectorXd& inv_scale) {
    return ((x - c).array() * inv_scale.array()).tanh().matrix();
}

double robust_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, const Eigen::Ref<const Eigen::RowVectorXd>& c,
                  const Vector& scale) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) d += scale(i) * log_cosh((x(i) - c(i)) / scale(i));
    return d;
}

void fill_distances(const ClusterModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                    std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(model.clusters()));
    for (int j = 0; j < model.clusters(); ++j) {
        out[static_cast<std::size_t>(j)] = model.algorithm == Algorithm::FCM
                                               ? squared_euclidean(x, model.centers.row(j))
                                               : robust_row(x, model.centers.row(j), model.scale);
    }
}

Vector row_weights(const ClusterModel& model, const std::vector<double>& distances) {
    const double exponent = 1.0 / (1.0 - model.fuzzifier);
    if (model.algorithm != Algorithm::PossCP) return normalized_weights(distances, exponent);
    Vector w(model.clusters());
    for (int j = 0; j < model.clusters(); ++j) {
        w(j) = possibilistic_weight(distances[static_cast<std::size_t>(j)], model.spread(j), model.fuzzifier);
    }
    return w;
}

// Euclidean fuzzy memberships, used to seed the PossCP spreads.
Matrix fcm_memberships(const Matrix& data, const Matrix& centers, double fuzzifier) {
    Matrix w(data.rows(), centers.rows());
    std::vector<double> d(static_cast<std::size_t>(centers.rows()));
    const double exponent = 1.0 / (1.0 - fuzzifier);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < centers.rows(); ++j) {
            d[static_cast<std::size_t>(j)] = squared_euclidean(data.row(i), centers.row(j));
        }
        w.row(i) = normalized_weights(d, exponent).transpose();
    }
    return w;
}

void check_fit_input(const Matrix& data, const ClusterConfig& config) {
    config.validate();
    const auto n = data.rows();
    if (data.cols() == 0) throw Error(ErrorKind::Shape, "clustering needs at least one dimension");
    if (n <= config.clusters) {
        throw Error(ErrorKind::InvalidConfig, "need more samples (" + std::to_string(n) + ") than clusters (" +
                                                  std::to_string(config.clusters) + ")");
    }
    if (!data.allFinite()) throw Error(ErrorKind::InvalidData, "clustering input contains non-finite values");
    bool identical = true;
    for (Eigen::Index i = 1; i < n && identical; ++i) identical = (data.row(i) == data.row(0));
    if (identical) throw Error(ErrorKind::DegenerateData, "all samples are identical");
}

ClusterModel make_model(Algorithm algorithm, const ClusterConfig& config, const Matrix& centers) {
    ClusterModel model;
    model.algorithm = algorithm;
    model.centers = centers;
    model.fuzzifier = config.fuzzifier;
    model.scale = Vector::Constant(centers.cols(), config.scale);
    model.learning_rate = config.learning_rate;
    model.learning_rate_decay = config.learning_rate_decay;
    model.epsilon = config.epsilon;
    model.max_iterations = config.max_iterations;
    return model;
}

FitResult run_fcm(const Matrix& data, const ClusterConfig& config, const Matrix& initial) {
    FitResult result;
    result.model = make_model(Algorithm::FCM, config, initial);
    ClusterModel& model = result.model;
    Matrix w = predict(model, data).weights;
    for (int t = 1; t <= config.max_iterations; ++t) {
        const Matrix wb = w.array().pow(config.fuzzifier).matrix();
        for (int j = 0; j < model.clusters(); ++j) {
            const double mass = wb.col(j).sum();
            if (mass > 0.0) model.centers.row(j) = (wb.col(j).transpose() * data) / mass;
        }
        Matrix next = predict(model, data).weights;
        const double delta = (next - w).norm();
        w = std::move(next);
        result.trace.error.push_back(delta);
        result.trace.iterations_used = t;
        if (delta <= config.epsilon) {
            result.trace.converged = true;
            break;
        }
    }
    result.memberships.weights = std::move(w);
    return result;
}

FitResult run_gradient(Algorithm algorithm, const Matrix& data, const ClusterConfig& config,
                       const Matrix& initial) {
    FitResult result;
    result.model = make_model(algorithm, config, initial);
    ClusterModel& model = result.model;
    if (algorithm == Algorithm::PossCP && config.warm_start) {
        const FitResult warm = run_fcm(data, config, initial);
        model.centers = warm.model.centers;
        result.trace.warm_start_iterations = warm.trace.iterations_used;
    }
    const auto n = data.rows();
    const int m = model.clusters();
    const bool possibilistic = algorithm == Algorithm::PossCP;

    // Spreads from one Euclidean membership pass at the initial centers.
    auto update_spread = [&](const Matrix& wb) {
        model.spread.resize(m);
        for (int j = 0; j < m; ++j) {
            double num = 0.0;
            double den = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                num += wb(k, j) * robust_row(data.row(k), model.centers.row(j), model.scale);
                den += wb(k, j);
            }
            double mu = den > 0.0 ? num / den : 0.0;
            if (!(mu >= kSpreadFloor)) {
                mu = kSpreadFloor;
                result.trace.spread_clamped = true;
            }
            model.spread(j) = mu;
        }
    };
    if (possibilistic) {
        update_spread(fcm_memberships(data, model.centers, config.fuzzifier).array().pow(config.fuzzifier).matrix());
    }

    Matrix w = predict(model, data).weights;
    Matrix wb(n, m);
    std::vector<double> distances;
    const Eigen::RowVectorXd inv_scale = model.scale.cwiseInverse().transpose();
    for (int t = 1; t <= config.max_iterations; ++t) {
        const double eta = config.learning_rate / (1.0 + config.learning_rate_decay * (t - 1));
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto x = data.row(k);
            fill_distances(model, x, distances);
            const Vector wk = row_weights(model, distances);
            for (int j = 0; j < m; ++j) {
                const double step = eta * std::pow(wk(j), config.fuzzifier);
                wb(k, j) = std::pow(wk(j), config.fuzzifier);
                model.centers.row(j) += step * descent_row(x, model.centers.row(j), inv_scale);
            }
        }
        if (possibilistic) update_spread(wb);

        Matrix next = predict(model, data).weights;
        const double delta = (next - w).norm();
        w = std::move(next);
        result.trace.error.push_back(delta);
        result.trace.iterations_used = t;
        if (!std::isfinite(delta)) break;
        if (delta <= config.epsilon) {
            result.trace.converged = true;
            break;
        }
    }
    result.memberships.weights = std::move(w);
    return result;
}

}  // namespace

Vector robust_descent_direction(std::span<const double> x, std::span<const double> c,
                                std::span<const double> beta) {
    if (x.size() != c.size() || x.size() != beta.size()) {
        throw Error(ErrorKind::Shape, "robust distance operands differ in dimension");
    }
    const auto d = static_cast<Eigen::Index>(x.size());
    const Eigen::Map<const Eigen::RowVectorXd> xr(x.data(), d);
    const Eigen::Map<const Eigen::RowVectorXd> cr(c.data(), d);
    const Eigen::RowVectorXd inv = Eigen::Map<const Eigen::RowVectorXd>(beta.data(), d).cwiseInverse();
    return descent_row(xr, cr, inv).transpose();
}

Matrix sample_initial_centers(const Matrix& data, int m, std::uint64_t seed) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    Matrix centers(m, data.cols());
    int chosen = 0;
    for (Eigen::Index idx : order) {
        bool duplicate = false;
        for (int j = 0; j < chosen && !duplicate; ++j) duplicate = (centers.row(j) == data.row(idx));
        if (duplicate) continue;
        centers.row(chosen++) = data.row(idx);
        if (chosen == m) return centers;
    }
    throw Error(ErrorKind::DegenerateData, "fewer distinct samples than clusters");
}

FitResult cluster_fit_from(Algorithm algorithm, const FeatureMatrix& data, const ClusterConfig& config,
                           const Matrix& initial_centers) {
    check_fit_input(data.values(), config);
    if (initial_centers.rows() != config.clusters ||
        initial_centers.cols() != data.values().cols()) {
        throw Error(ErrorKind::Shape, "initial centers do not match cluster count and data dimension");
    }
    if (algorithm == Algorithm::FCM) return run_fcm(data.values(), config, initial_centers);
    return run_gradient(algorithm, data.values(), config, initial_centers);
}

FitResult cluster_fit(Algorithm algorithm, const FeatureMatrix& data, const ClusterConfig& config,
                      std::uint64_t seed) {
    check_fit_input(data.values(), config);
    return cluster_fit_from(algorithm, data, config, sample_initial_centers(data.values(), config.clusters, seed));
}

FitResult fcm_fit(const FeatureMatrix& data, const ClusterConfig& config, std::uint64_t seed) {
    return cluster_fit(Algorithm::FCM, data, config, seed);
}

FitResult probcp_fit(const FeatureMatrix& data, const ClusterConfig& config, std::uint64_t seed) {
    return cluster_fit(Algorithm::ProbCP, data, config, seed);
}

FitResult posscp_fit(const FeatureMatrix& data, const ClusterConfig& config, std::uint64_t seed) {
    return cluster_fit(Algorithm::PossCP, data, config, seed);
}

MembershipMatrix predict(const ClusterModel& model, const Matrix& data) {
    if (static_cast<std::size_t>(data.cols()) != model.dim() && data.rows() > 0) {
        throw Error(ErrorKind::Shape, "model has dimension " + std::to_string(model.dim()) + ", data has " +
                                          std::to_string(data.cols()));
    }
    if (model.algorithm == Algorithm::PossCP && model.spread.size() != model.clusters()) {
        throw Error(ErrorKind::InvalidConfig, "possibilistic model lacks cluster spreads");
    }
    MembershipMatrix out;
    out.weights.resize(data.rows(), model.clusters());
    std::vector<double> distances;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        fill_distances(model, data.row(i), distances);
        out.weights.row(i) = row_weights(model, distances).transpose();
    }
    return out;
}

MembershipMatrix predict(const ClusterModel& model, const FeatureMatrix& data) {
    return predict(model, data.values());
}

LabelMapping best_label_mapping(const std::vector<int>& assignments, const std::vector<int>& labels, int m) {
    if (assignments.size() != labels.size()) throw Error(ErrorKind::Shape, "assignment/label length mismatch");
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    LabelMapping best;
    best.mse = std::numeric_limits<double>::infinity();
    do {
        LabelMapping candidate{perm, 0.0};
        candidate.mse = mapped_mse(candidate, assignments, labels);
        if (candidate.mse < best.mse) best = candidate;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double mapped_mse(const LabelMapping& mapping, const std::vector<int>& assignments, const std::vector<int>& labels) {
    if (assignments.size() != labels.size()) throw Error(ErrorKind::Shape, "assignment/label length mismatch");
    if (assignments.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const double diff = mapping.apply(assignments[i]) - labels[i];
        sum += diff * diff;
    }
    return sum / static_cast<double>(assignments.size());
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

AggregateResult fit_averaged(Algorithm algorithm, const LabeledSplit& split, const ClusterConfig& config, int runs,
                             std::uint64_t base_seed) {
    if (runs < 1) throw Error(ErrorKind::InvalidConfig, "runs must be at least 1");
    AggregateResult agg;
    agg.algorithm = algorithm;
    std::vector<double> train;
    std::vector<double> test;
    for (int r = 0; r < runs; ++r) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
        const FitResult fit = cluster_fit(algorithm, split.train, config, seed);
        const auto mapping = best_label_mapping(fit.memberships.argmax(), split.train_labels, config.clusters);
        const auto test_assign = predict(fit.model, split.test).argmax();
        RunResult run{seed, mapping.mse, mapped_mse(mapping, test_assign, split.test_labels),
                      fit.trace.iterations_used, fit.trace.converged};
        train.push_back(run.mse_train);
        test.push_back(run.mse_test);
        agg.runs.push_back(run);
    }
    std::tie(agg.mse_train_mean, agg.mse_train_std) = mean_std(train);
    std::tie(agg.mse_test_mean, agg.mse_test_std) = mean_std(test);
    return agg;
}

void to_json(nlohmann::json& j, const ClusterConfig& c) {
    j = nlohmann::json{{"clusters", c.clusters},
                       {"fuzzifier", c.fuzzifier},
                       {"scale", c.scale},
                       {"learning_rate", c.learning_rate},
                       {"learning_rate_decay", c.learning_rate_decay},
                       {"epsilon", c.epsilon},
                       {"max_iterations", c.max_iterations},
                       {"warm_start", c.warm_start}};
}

void from_json(const nlohmann::json& j, ClusterConfig& c) {
    const ClusterConfig d;
    c.clusters = j.value("clusters", d.clusters);
    c.fuzzifier = j.value("fuzzifier", d.fuzzifier);
    c.scale = j.value("scale", d.scale);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.learning_rate_decay = j.value("learning_rate_decay", d.learning_rate_decay);
    c.epsilon = j.value("epsilon", d.epsilon);
    c.max_iterations = j.value("max_iterations", d.max_iterations);
    c.warm_start = j.value("warm_start", d.warm_start);
}

void to_json(nlohmann::json& j, const ClusterModel& m) {
    j = nlohmann::json{{"algorithm", to_string(m.algorithm)},
                       {"centers", matrix_to_json(m.centers)},
                       {"fuzzifier", m.fuzzifier},
                       {"scale", vector_to_json(m.scale)},
                       {"learning_rate", m.learning_rate},
                       {"learning_rate_decay", m.learning_rate_decay},
                       {"epsilon", m.epsilon},
                       {"max_iterations", m.max_iterations}};
    if (m.algorithm == Algorithm::PossCP) j["spread"] = vector_to_json(m.spread);
}

void from_json(const nlohmann::json& j, ClusterModel& m) {
    m.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
    m.scale = vector_from_json(j.at("scale"));
    m.centers = matrix_from_json(j.at("centers"), m.scale.size());
    m.fuzzifier = j.at("fuzzifier").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.learning_rate_decay = j.value("learning_rate_decay", 0.0);
    m.epsilon = j.at("epsilon").get<double>();
    m.max_iterations = j.at("max_iterations").get<int>();
    m.spread = j.contains("spread") ? vector_from_json(j.at("spread")) : Vector();
}

void to_json(nlohmann::json& j, const TrainingTrace& t) {
    j = nlohmann::json{{"error", t.error},
                       {"iterations_used", t.iterations_used},
                       {"converged", t.converged},
                       {"spread_clamped", t.spread_clamped},
                       {"warm_start_iterations", t.warm_start_iterations}};
}

void from_json(const nlohmann::json& j, TrainingTrace& t) {
    t.error = j.at("error").get<std::vector<double>>();
    t.iterations_used = j.at("iterations_used").get<int>();
    t.converged = j.at("converged").get<bool>();
    t.spread_clamped = j.value("spread_clamped", false);
    t.warm_start_iterations = j.value("warm_start_iterations", 0);
}

void write_trace_csv(std::ostream& out, const TrainingTrace& t) {
    out << "iteration,error\n";
    for (std::size_t i = 0; i < t.error.size(); ++i) out << (i + 1) << ',' << format_number(t.error[i]) << '\n';
}

}  // namespace cdf
