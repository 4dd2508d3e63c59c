#include "cdf/feature_extract.hpp"

#include "cdf/error.hpp"
#include "cdf/json_eigen.hpp"

#include <Eigen/Eigenvalues>

#include <numeric>
#include <ostream>

namespace cdf {

Vector PcaModel::full_ratio() const {
    const double total = spectrum.sum();
    return spectrum / total;
}

Matrix covariance(const Matrix& x) {
    const Matrix centered = x.rowwise() - x.colwise().mean();
    return (centered.transpose() * centered) / static_cast<double>(x.rows());
}

PcaModel fit_pca(const FeatureMatrix& matrix, double cumulative_threshold) {
    if (!(cumulative_threshold > 0.0 && cumulative_threshold <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "cumulative threshold must lie in (0, 1]");
    }
    if (matrix.rows() < 2) throw Error(ErrorKind::InsufficientData, "PCA needs at least 2 rows");
    if (matrix.cols() == 0) throw Error(ErrorKind::InsufficientData, "PCA needs at least 1 feature");
    if (!matrix.all_finite()) throw Error(ErrorKind::InvalidData, "PCA input contains non-finite values");

    const Matrix& x = matrix.values();
    const Matrix cov = covariance(x);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::InvalidData, "symmetric eigen-decomposition failed");
    }
    // Eigen returns ascending order.
    const auto n = cov.rows();
    Vector values = solver.eigenvalues().reverse().cwiseMax(0.0);
    Matrix vectors = solver.eigenvectors().rowwise().reverse();
    const double total = values.sum();
    if (!(total > 0.0)) throw Error(ErrorKind::DegenerateData, "data has zero total variance");

    Eigen::Index k = n;
    double cumulative = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += values(i) / total;
        if (cumulative > cumulative_threshold) {
            k = i + 1;
            break;
        }
    }

    PcaModel model;
    model.input_names = matrix.names();
    model.input_mean = x.colwise().mean().transpose();
    model.cumulative_threshold = cumulative_threshold;
    model.spectrum = values;
    model.eigenvalues = values.head(k);
    model.explained_variance_ratio = values.head(k) / total;
    model.components.resize(k, n);
    for (Eigen::Index i = 0; i < k; ++i) {
        Vector v = vectors.col(i);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        model.components.row(i) = v.transpose();
    }
    return model;
}

FeatureMatrix project(const PcaModel& model, const FeatureMatrix& matrix) {
    if (matrix.cols() != model.input_dim()) {
        throw Error(ErrorKind::Shape, "PCA fitted on " + std::to_string(model.input_dim()) +
                                          " features, got " + std::to_string(matrix.cols()));
    }
    Matrix out = (matrix.values().rowwise() - model.input_mean.transpose()) * model.components.transpose();
    std::vector<std::string> names;
    for (std::size_t i = 0; i < model.output_dim(); ++i) names.push_back("pc" + std::to_string(i + 1));
    return FeatureMatrix(std::move(names), std::move(out));
}

void to_json(nlohmann::json& j, const PcaModel& m) {
    j = nlohmann::json{{"input_names", m.input_names},
                       {"input_mean", vector_to_json(m.input_mean)},
                       {"components", matrix_to_json(m.components)},
                       {"eigenvalues", vector_to_json(m.eigenvalues)},
                       {"explained_variance_ratio", vector_to_json(m.explained_variance_ratio)},
                       {"spectrum", vector_to_json(m.spectrum)},
                       {"cumulative_threshold", m.cumulative_threshold}};
}

void from_json(const nlohmann::json& j, PcaModel& m) {
    m.input_names = j.at("input_names").get<std::vector<std::string>>();
    m.input_mean = vector_from_json(j.at("input_mean"));
    m.components = matrix_from_json(j.at("components"), static_cast<Eigen::Index>(m.input_names.size()));
    m.eigenvalues = vector_from_json(j.at("eigenvalues"));
    m.explained_variance_ratio = vector_from_json(j.at("explained_variance_ratio"));
    m.spectrum = vector_from_json(j.at("spectrum"));
    m.cumulative_threshold = j.at("cumulative_threshold").get<double>();
}

void write_variance_csv(std::ostream& out, const PcaModel& m) {
    out << "component,eigenvalue,explained_variance_ratio,cumulative_ratio,retained\n";
    const Vector ratio = m.full_ratio();
    double cumulative = 0.0;
    for (Eigen::Index i = 0; i < ratio.size(); ++i) {
        cumulative += ratio(i);
        out << "pc" << (i + 1) << ',' << format_number(m.spectrum(i)) << ',' << format_number(ratio(i)) << ','
            << format_number(cumulative) << ','
            << (static_cast<std::size_t>(i) < m.output_dim() ? 1 : 0) << '\n';
    }
}

}  // namespace cdf
