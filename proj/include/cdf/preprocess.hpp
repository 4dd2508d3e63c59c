#pragma once

#include "cdf/feature_matrix.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace cdf {

struct CleanConfig {
    /// Feature names dropped as irrelevant or not explainable.
    std::vector<std::string> irrelevant;
};

enum class DropReason { AllMissing, Duplicate, Irrelevant };

struct CleanReport {
    struct Dropped {
        std::string name;
        DropReason reason;
        std::string duplicate_of;  // set for DropReason::Duplicate
    };
    std::vector<Dropped> dropped;
};

/// Drops all-NaN columns, exact duplicates of an earlier column, and columns
/// named in `config.irrelevant`. Throws EmptyResult when nothing survives.
std::pair<FeatureMatrix, CleanReport> clean(const FeatureMatrix& matrix, const CleanConfig& config = {});

/// Standard scaler with population standard deviation. Constant columns are
/// flagged, keep deviation 0 and transform to 0.
struct ScalerModel {
    std::vector<std::string> names;
    Vector mean;
    Vector deviation;
    std::vector<bool> flagged;

    std::size_t size() const { return names.size(); }
};

ScalerModel fit_scaler(const FeatureMatrix& matrix);
FeatureMatrix transform(const ScalerModel& scaler, const FeatureMatrix& matrix);

std::string to_string(DropReason reason);

void to_json(nlohmann::json& j, const ScalerModel& s);
void from_json(const nlohmann::json& j, ScalerModel& s);
void to_json(nlohmann::json& j, const CleanReport& r);

}  // namespace cdf
