#include "cdf/feature_matrix.hpp"

#include "cdf/error.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <unordered_set>

namespace cdf {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidConfig: return "invalid-config";
        case ErrorKind::InvalidData: return "invalid-data";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::EmptyResult: return "empty-result";
        case ErrorKind::MissingFeature: return "missing-feature";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::DegenerateData: return "degenerate-data";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> names, Matrix values)
    : names_(std::move(names)), values_(std::move(values)) {
    if (names_.size() != static_cast<std::size_t>(values_.cols())) {
        throw Error(ErrorKind::Shape, "feature name count " + std::to_string(names_.size()) +
                                          " does not match column count " +
                                          std::to_string(values_.cols()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : names_) {
        if (!seen.insert(name).second) {
            throw Error(ErrorKind::InvalidData, "duplicate feature name '" + name + "'");
        }
    }
}

long FeatureMatrix::index_of(const std::string& name) const {
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (names_[j] == name) return static_cast<long>(j);
    }
    return -1;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::size_t>& columns) const {
    std::vector<std::string> names;
    Matrix values(values_.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] >= cols()) throw Error(ErrorKind::Shape, "column index out of range");
        names.push_back(names_[columns[j]]);
        values.col(static_cast<Eigen::Index>(j)) = values_.col(static_cast<Eigen::Index>(columns[j]));
    }
    return FeatureMatrix(std::move(names), std::move(values));
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& rows) const {
    Matrix values(static_cast<Eigen::Index>(rows.size()), values_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= this->rows()) throw Error(ErrorKind::Shape, "row index out of range");
        values.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    }
    return FeatureMatrix(names_, std::move(values));
}

bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.names_ != b.names_) return false;
    if (a.values_.rows() != b.values_.rows() || a.values_.cols() != b.values_.cols()) return false;
    // Bitwise comparison so NaN columns compare equal to themselves.
    for (Eigen::Index i = 0; i < a.values_.size(); ++i) {
        const double x = a.values_.data()[i];
        const double y = b.values_.data()[i];
        if (!(x == y) && !(std::isnan(x) && std::isnan(y))) return false;
    }
    return true;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), r.ptr);
}

}  // namespace cdf
