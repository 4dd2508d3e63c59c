#include "cdf/json_eigen.hpp"

namespace cdf {

nlohmann::json vector_to_json(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Vector row = m.row(i).transpose();
        rows.push_back(vector_to_json(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index cols) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows > 0) cols = static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        m.row(i) = vector_from_json(j.at(static_cast<std::size_t>(i))).transpose();
    }
    return m;
}

}  // namespace cdf
