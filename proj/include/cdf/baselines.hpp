#pragma once

#include "cdf/clustering.hpp"
#include "cdf/feature_matrix.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace cdf {

enum class BaselineKind { KMeans, Agglomerative, Birch };
enum class Linkage { Single, Complete, Average };

std::string to_string(BaselineKind kind);
std::string to_string(Linkage linkage);
Linkage linkage_from_string(const std::string& text);

/// BIRCH clustering feature: weighted count, linear sum and sum of squared norms.
struct ClusteringFeature {
    double n = 0.0;
    Vector linear_sum;
    double square_sum = 0.0;

    static ClusteringFeature of_point(const Eigen::Ref<const Eigen::RowVectorXd>& x);
    ClusteringFeature& operator+=(const ClusteringFeature& other);
    Vector centroid() const;
    /// Root mean squared distance of the summarized points to their centroid.
    double radius() const;
};

ClusteringFeature operator+(ClusteringFeature a, const ClusteringFeature& b);

struct BaselineModel {
    BaselineKind kind = BaselineKind::KMeans;
    int k = 2;
    Matrix centers;                 // one row per cluster (centroids for agglomerative)
    std::vector<int> labels;        // cluster of every training row
    int iterations = 0;             // Lloyd iterations (KMeans)
    std::vector<double> objective;  // within-cluster sum of squares per Lloyd iteration
    Linkage linkage = Linkage::Average;
    std::vector<double> merge_heights;  // all N-1 merges, ascending
    double threshold = 0.0;
    int branching = 0;
    std::vector<ClusteringFeature> subclusters;  // BIRCH leaf entries
    std::vector<int> subcluster_labels;

    int clusters() const { return static_cast<int>(centers.rows()); }
};

/// Lloyd iterations from explicit centers with per-row weights. An empty cluster is
/// reseeded at the row farthest from its current center.
BaselineModel kmeans_fit_from(const Matrix& data, const Vector& weights, const Matrix& initial, int max_iterations = 300);

/// k distinct rows chosen with `seed` as initial centers.
BaselineModel kmeans_fit(const Matrix& data, int k, std::uint64_t seed, int max_iterations = 300);

/// Bottom-up Euclidean clustering cut at k clusters (nearest-neighbour chain).
BaselineModel agglomerative_fit(const Matrix& data, int k, Linkage linkage = Linkage::Average);

/// Single-pass CF tree; leaf entries are reclustered into k groups by weighted k-means seeded with `seed`.
BaselineModel birch_fit(const Matrix& data, double threshold, int branching, int k, std::uint64_t seed = 0);

/// Cluster index for new rows: nearest center, or the label of the nearest BIRCH subcluster.
std::vector<int> baseline_predict(const BaselineModel& model, const Matrix& data);

struct BaselineScore {
    double mse_train = 0.0;
    double mse_test = 0.0;
};

/// Training rows keep their fitted labels; test rows are predicted. Mapping chosen on train.
BaselineScore evaluate_baseline(const BaselineModel& model, const Matrix& test, const std::vector<int>& train_labels,
                                const std::vector<int>& test_labels);

void to_json(nlohmann::json& j, const ClusteringFeature& cf);
void to_json(nlohmann::json& j, const BaselineModel& m);

}  // namespace cdf
