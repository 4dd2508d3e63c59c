#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace cdf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// N x n table of telemetry samples; one named column per feature.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<std::string> names, Matrix values);

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }

    const std::vector<std::string>& names() const { return names_; }
    const Matrix& values() const { return values_; }
    Matrix& values() { return values_; }

    /// Column index by name, or -1.
    long index_of(const std::string& name) const;

    FeatureMatrix select_columns(const std::vector<std::size_t>& columns) const;
    FeatureMatrix select_rows(const std::vector<std::size_t>& rows) const;

    bool all_finite() const { return values_.allFinite(); }

    friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b);

private:
    std::vector<std::string> names_;
    Matrix values_;
};

/// Shortest decimal text that reads back to the same double; "nan" for NaN.
std::string format_number(double value);

}  // namespace cdf
