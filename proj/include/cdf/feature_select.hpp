#pragma once

#include "cdf/feature_matrix.hpp"

#include <json.hpp>

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cdf {

/// Default histogram resolution for `n` samples: ceil(sqrt(n)).
int default_bin_count(std::size_t n);

/// Shannon entropy in nats of an equal-width histogram with `bins` bins over
/// [min, max] of the column. A constant column has entropy 0.
double feature_entropy(std::span<const double> column, int bins);

struct EntropyReport {
    struct Entry {
        std::string name;
        double entropy;
    };
    std::vector<Entry> entries;  // sorted by entropy, descending
    double threshold = 0.0;
    std::vector<std::string> selected;  // original column order
    int bin_count = 0;
};

/// Keeps columns with entropy strictly above `h_min`. `bins <= 0` selects the
/// default bin count for the matrix height.
std::pair<FeatureMatrix, EntropyReport> select_features(const FeatureMatrix& matrix, double h_min, int bins = 0);

void to_json(nlohmann::json& j, const EntropyReport& r);
void from_json(const nlohmann::json& j, EntropyReport& r);
void write_entropy_csv(std::ostream& out, const EntropyReport& r);

}  // namespace cdf
