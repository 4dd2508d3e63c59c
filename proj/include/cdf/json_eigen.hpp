#pragma once

#include "cdf/feature_matrix.hpp"

#include <json.hpp>

namespace cdf {

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

/// Row-major nested arrays. `cols` is used when the array has no rows.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index cols = 0);

}  // namespace cdf
