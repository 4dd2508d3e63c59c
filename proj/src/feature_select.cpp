#include "cdf/feature_select.hpp"

#include "cdf/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace cdf {

int default_bin_count(std::size_t n) {
    return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
}

double feature_entropy(std::span<const double> column, int bins) {
    if (column.empty()) throw Error(ErrorKind::InsufficientData, "entropy of an empty column");
    if (bins < 1) throw Error(ErrorKind::InvalidConfig, "bin count must be at least 1");
    const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw Error(ErrorKind::InvalidData, "entropy input contains non-finite values");
    }
    if (lo == hi) return 0.0;

    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double v : column) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        counts[std::min(b, counts.size() - 1)]++;
    }
    const auto n = static_cast<double>(column.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

std::pair<FeatureMatrix, EntropyReport> select_features(const FeatureMatrix& matrix, double h_min, int bins) {
    if (matrix.rows() == 0) throw Error(ErrorKind::InsufficientData, "entropy selection on an empty matrix");
    EntropyReport report;
    report.threshold = h_min;
    report.bin_count = bins > 0 ? bins : default_bin_count(matrix.rows());

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
        const auto col = matrix.values().col(static_cast<Eigen::Index>(j));
        const std::vector<double> column(col.data(), col.data() + col.size());
        const double h = feature_entropy(column, report.bin_count);
        report.entries.push_back({matrix.names()[j], h});
        if (h > h_min) {
            keep.push_back(j);
            report.selected.push_back(matrix.names()[j]);
        }
    }
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const auto& a, const auto& b) { return a.entropy > b.entropy; });
    if (keep.empty()) {
        throw Error(ErrorKind::EmptyResult, "no feature has entropy above " + std::to_string(h_min));
    }
    return {matrix.select_columns(keep), std::move(report)};
}

void to_json(nlohmann::json& j, const EntropyReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) entries.push_back({{"name", e.name}, {"entropy", e.entropy}});
    j = nlohmann::json{{"threshold", r.threshold},
                       {"bin_count", r.bin_count},
                       {"entries", std::move(entries)},
                       {"selected", r.selected}};
}

void from_json(const nlohmann::json& j, EntropyReport& r) {
    r.threshold = j.at("threshold").get<double>();
    r.bin_count = j.at("bin_count").get<int>();
    r.entries.clear();
    for (const auto& e : j.at("entries")) {
        r.entries.push_back({e.at("name").get<std::string>(), e.at("entropy").get<double>()});
    }
    r.selected = j.at("selected").get<std::vector<std::string>>();
}

void write_entropy_csv(std::ostream& out, const EntropyReport& r) {
    out << "feature,entropy\n";
    for (const auto& e : r.entries) out << e.name << ',' << format_number(e.entropy) << '\n';
}

}  // namespace cdf
