#include "cdf/preprocess.hpp"

#include "cdf/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace cdf {

namespace {

bool same_column(const Matrix& values, Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        const double x = values(i, a);
        const double y = values(i, b);
        if (x == y) continue;
        if (std::isnan(x) && std::isnan(y)) continue;
        return false;
    }
    return true;
}

}  // namespace

std::pair<FeatureMatrix, CleanReport> clean(const FeatureMatrix& matrix, const CleanConfig& config) {
    CleanReport report;
    std::vector<std::size_t> keep;
    const Matrix& values = matrix.values();
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        const auto& name = matrix.names()[j];
        const auto col = static_cast<Eigen::Index>(j);
        if (std::find(config.irrelevant.begin(), config.irrelevant.end(), name) != config.irrelevant.end()) {
            report.dropped.push_back({name, DropReason::Irrelevant, {}});
            continue;
        }
        if (values.rows() == 0 || values.col(col).array().isNaN().all()) {
            report.dropped.push_back({name, DropReason::AllMissing, {}});
            continue;
        }
        auto dup = std::find_if(keep.begin(), keep.end(), [&](std::size_t k) {
            return same_column(values, static_cast<Eigen::Index>(k), col);
        });
        if (dup != keep.end()) {
            report.dropped.push_back({name, DropReason::Duplicate, matrix.names()[*dup]});
            continue;
        }
        keep.push_back(j);
    }
    if (keep.empty()) throw Error(ErrorKind::EmptyResult, "cleaning dropped every feature");
    return {matrix.select_columns(keep), std::move(report)};
}

ScalerModel fit_scaler(const FeatureMatrix& matrix) {
    if (matrix.rows() < 2) throw Error(ErrorKind::InsufficientData, "scaler needs at least 2 rows");
    if (!matrix.all_finite()) throw Error(ErrorKind::InvalidData, "scaler input contains non-finite values");
    ScalerModel model;
    model.names = matrix.names();
    const Matrix& x = matrix.values();
    const auto n = static_cast<double>(x.rows());
    model.mean = x.colwise().sum().transpose() / n;
    model.deviation.resize(x.cols());
    model.flagged.assign(matrix.cols(), false);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (x.col(j).maxCoeff() == x.col(j).minCoeff()) {
            model.mean(j) = x(0, j);
            model.deviation(j) = 0.0;
            model.flagged[static_cast<std::size_t>(j)] = true;
            continue;
        }
        const double var = (x.col(j).array() - model.mean(j)).square().sum() / n;
        model.deviation(j) = std::sqrt(var);
    }
    return model;
}

FeatureMatrix transform(const ScalerModel& scaler, const FeatureMatrix& matrix) {
    if (matrix.cols() != scaler.size()) {
        throw Error(ErrorKind::Shape, "scaler fitted on " + std::to_string(scaler.size()) +
                                          " features, got " + std::to_string(matrix.cols()));
    }
    Matrix out(matrix.values().rows(), matrix.values().cols());
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        if (scaler.flagged[static_cast<std::size_t>(j)]) {
            out.col(j).setZero();
        } else {
            out.col(j) = (matrix.values().col(j).array() - scaler.mean(j)) / scaler.deviation(j);
        }
    }
    return FeatureMatrix(matrix.names(), std::move(out));
}

std::string to_string(DropReason reason) {
    switch (reason) {
        case DropReason::AllMissing: return "all_missing";
        case DropReason::Duplicate: return "duplicate";
        case DropReason::Irrelevant: return "irrelevant";
    }
    return "unknown";
}

void to_json(nlohmann::json& j, const ScalerModel& s) {
    j = nlohmann::json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        j.push_back({{"name", s.names[i]},
                     {"mean", s.mean(k)},
                     {"deviation", s.deviation(k)},
                     {"flagged", static_cast<bool>(s.flagged[i])}});
    }
}

void from_json(const nlohmann::json& j, ScalerModel& s) {
    const auto n = static_cast<Eigen::Index>(j.size());
    s.names.clear();
    s.flagged.clear();
    s.mean.resize(n);
    s.deviation.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& e = j.at(static_cast<std::size_t>(i));
        s.names.push_back(e.at("name").get<std::string>());
        s.mean(i) = e.at("mean").get<double>();
        s.deviation(i) = e.at("deviation").get<double>();
        s.flagged.push_back(e.at("flagged").get<bool>());
    }
}

void to_json(nlohmann::json& j, const CleanReport& r) {
    j = nlohmann::json::array();
    for (const auto& d : r.dropped) {
        nlohmann::json e{{"name", d.name}, {"reason", to_string(d.reason)}};
        if (!d.duplicate_of.empty()) e["duplicate_of"] = d.duplicate_of;
        j.push_back(std::move(e));
    }
}

}  // namespace cdf
