#pragma once

#include "cdf/feature_matrix.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace cdf {

/// Principal components of the covariance matrix, truncated to the shortest
/// prefix whose cumulative explained-variance ratio exceeds the threshold.
struct PcaModel {
    std::vector<std::string> input_names;
    Vector input_mean;
    Matrix components;             // k x n, orthonormal rows
    Vector eigenvalues;            // k retained, descending
    Vector explained_variance_ratio;  // k retained
    Vector spectrum;               // all n eigenvalues, descending
    double cumulative_threshold = 0.95;

    std::size_t input_dim() const { return input_names.size(); }
    std::size_t output_dim() const { return static_cast<std::size_t>(components.rows()); }

    /// Explained-variance ratio of every component, summing to 1.
    Vector full_ratio() const;
};

/// Population covariance (divides by N) of the column-centered data.
Matrix covariance(const Matrix& x);

PcaModel fit_pca(const FeatureMatrix& matrix, double cumulative_threshold = 0.95);

/// (X - mean) * components^T, with columns named pc1..pck.
FeatureMatrix project(const PcaModel& model, const FeatureMatrix& matrix);

void to_json(nlohmann::json& j, const PcaModel& m);
void from_json(const nlohmann::json& j, PcaModel& m);
void write_variance_csv(std::ostream& out, const PcaModel& m);

}  // namespace cdf
