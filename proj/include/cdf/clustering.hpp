#pragma once

#include "cdf/feature_matrix.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cdf {

enum class Algorithm { FCM, ProbCP, PossCP };

std::string to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& text);

/// Hyperparameters shared by the three fuzzy procedures.
struct ClusterConfig {
    int clusters = 2;
    double fuzzifier = 2.0;        // beta > 1
    double scale = 1.0;            // beta_i, broadcast to every dimension
    double learning_rate = 1e-3;   // eta
    /// eta_t = eta / (1 + decay * t) for epoch t (0-based); 0 keeps eta fixed.
    double learning_rate_decay = 0.0;
    double epsilon = 1e-4;
    int max_iterations = 100;
    /// PossCP only: start from converged FCM centers instead of the sampled points.
    bool warm_start = true;

    void validate() const;
};

struct ClusterModel {
    Algorithm algorithm = Algorithm::FCM;
    Matrix centers;       // m x d
    Vector spread;        // mu_j, PossCP only; empty otherwise
    double fuzzifier = 2.0;
    Vector scale;         // beta_i, length d
    double learning_rate = 1e-3;
    double learning_rate_decay = 0.0;
    double epsilon = 1e-4;
    int max_iterations = 100;

    int clusters() const { return static_cast<int>(centers.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(centers.cols()); }
};

/// N x m membership weights.
struct MembershipMatrix {
    Matrix weights;

    std::size_t rows() const { return static_cast<std::size_t>(weights.rows()); }
    /// Index of the largest weight per row (first on ties).
    std::vector<int> argmax() const;
};

struct TrainingTrace {
    /// Frobenius norm of the membership change after each iteration.
    std::vector<double> error;
    int iterations_used = 0;
    bool converged = false;
    /// PossCP: a spread collapsed below the floor and was clamped.
    bool spread_clamped = false;
    /// FCM iterations spent on the PossCP warm start (not part of error).
    int warm_start_iterations = 0;
};

struct FitResult {
    ClusterModel model;
    MembershipMatrix memberships;
    TrainingTrace trace;
};

inline constexpr double kSpreadFloor = 1e-12;

/// sum_i beta_i * ln cosh((x_i - c_i) / beta_i), evaluated without overflow.
double robust_distance(std::span<const double> x, std::span<const double> c, std::span<const double> beta);

/// tanh((x - c) / beta): the per-sample center step of the robust procedures, equal to
/// minus the gradient of robust_distance with respect to c.
Vector robust_descent_direction(std::span<const double> x, std::span<const double> c, std::span<const double> beta);

/// ln cosh(t) for any finite t; exact zero only at t = 0.
double log_cosh(double t);

/// Membership rows for the normalized procedures: w_j proportional to
/// dist_j^exponent with exponent < 0. Zero distances take the full weight.
Vector normalized_weights(std::span<const double> distances, double exponent);

/// (1 + (D / mu)^(1 / (beta - 1)))^-1
double possibilistic_weight(double distance, double spread, double fuzzifier);

FitResult fcm_fit(const FeatureMatrix& data, const ClusterConfig& config, std::uint64_t seed);
FitResult probcp_fit(const FeatureMatrix& data, const ClusterConfig& config, std::uint64_t seed);
FitResult posscp_fit(const FeatureMatrix& data, const ClusterConfig& config, std::uint64_t seed);
FitResult cluster_fit(Algorithm algorithm, const FeatureMatrix& data, const ClusterConfig& config,
                      std::uint64_t seed);

/// Same procedures started from explicit centers instead of seeded sampling.
FitResult cluster_fit_from(Algorithm algorithm, const FeatureMatrix& data, const ClusterConfig& config,
                           const Matrix& initial_centers);

/// Weight formula of the model's algorithm at fixed centers.
MembershipMatrix predict(const ClusterModel& model, const FeatureMatrix& data);
MembershipMatrix predict(const ClusterModel& model, const Matrix& data);

/// m distinct rows of `data` chosen uniformly with `seed`.
Matrix sample_initial_centers(const Matrix& data, int m, std::uint64_t seed);

// ---- Evaluation against binary ground truth ----

/// Cluster -> label assignment chosen on the training split.
struct LabelMapping {
    std::vector<int> label_of_cluster;
    double mse = 0.0;

    int apply(int cluster) const { return label_of_cluster.at(static_cast<std::size_t>(cluster)); }
};

/// Best of all m! cluster-to-label permutations by mean squared label error.
LabelMapping best_label_mapping(const std::vector<int>& assignments, const std::vector<int>& labels, int m);
double mapped_mse(const LabelMapping& mapping, const std::vector<int>& assignments, const std::vector<int>& labels);

struct LabeledSplit {
    FeatureMatrix train;
    FeatureMatrix test;
    std::vector<int> train_labels;
    std::vector<int> test_labels;
};

struct RunResult {
    std::uint64_t seed = 0;
    double mse_train = 0.0;
    double mse_test = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct AggregateResult {
    Algorithm algorithm = Algorithm::FCM;
    std::vector<RunResult> runs;
    double mse_train_mean = 0.0;
    double mse_train_std = 0.0;
    double mse_test_mean = 0.0;
    double mse_test_std = 0.0;
};

/// Population mean and standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

/// `runs` fits seeded base_seed, base_seed + 1, ...; MSE per the label-mapping protocol.
AggregateResult fit_averaged(Algorithm algorithm, const LabeledSplit& split, const ClusterConfig& config, int runs,
                             std::uint64_t base_seed);

void to_json(nlohmann::json& j, const ClusterConfig& c);
void from_json(const nlohmann::json& j, ClusterConfig& c);
void to_json(nlohmann::json& j, const ClusterModel& m);
void from_json(const nlohmann::json& j, ClusterModel& m);
void to_json(nlohmann::json& j, const TrainingTrace& t);
void from_json(const nlohmann::json& j, TrainingTrace& t);
void write_trace_csv(std::ostream& out, const TrainingTrace& t);

}  // namespace cdf
