#include "cdf/baselines.hpp"

#include "cdf/error.hpp"
#include "cdf/json_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>

namespace cdf {

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::KMeans: return "KMeans";
        case BaselineKind::Agglomerative: return "Hierarchical";
        case BaselineKind::Birch: return "BIRCH";
    }
    return "unknown";
}

std::string to_string(Linkage linkage) {
    switch (linkage) {
        case Linkage::Single: return "single";
        case Linkage::Complete: return "complete";
        case Linkage::Average: return "average";
    }
    return "unknown";
}

Linkage linkage_from_string(const std::string& text) {
    if (text == "single") return Linkage::Single;
    if (text == "complete") return Linkage::Complete;
    if (text == "average") return Linkage::Average;
    throw Error(ErrorKind::InvalidConfig, "unknown linkage '" + text + "'");
}

ClusteringFeature ClusteringFeature::of_point(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return ClusteringFeature{1.0, x.transpose(), x.squaredNorm()};
}

ClusteringFeature& ClusteringFeature::operator+=(const ClusteringFeature& other) {
    if (n == 0.0) {
        *this = other;
        return *this;
    }
    if (other.linear_sum.size() != linear_sum.size()) {
        throw Error(ErrorKind::Shape, "clustering features differ in dimension");
    }
    n += other.n;
    linear_sum += other.linear_sum;
    square_sum += other.square_sum;
    return *this;
}

ClusteringFeature operator+(ClusteringFeature a, const ClusteringFeature& b) {
    a += b;
    return a;
}

Vector ClusteringFeature::centroid() const {
    return linear_sum / n;
}

double ClusteringFeature::radius() const {
    const double r2 = square_sum / n - (linear_sum / n).squaredNorm();
    return r2 > 0.0 ? std::sqrt(r2) : 0.0;
}

namespace {

int nearest_row(const Matrix& centers, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < centers.rows(); ++j) {
        const double d = (centers.row(j) - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

void check_data(const Matrix& data, int k) {
    if (data.rows() == 0 || data.cols() == 0) throw Error(ErrorKind::Shape, "baseline input is empty");
    if (!data.allFinite()) throw Error(ErrorKind::InvalidData, "baseline input contains non-finite values");
    if (k < 2) throw Error(ErrorKind::InvalidConfig, "k must be at least 2");
    if (data.rows() < k) {
        throw Error(ErrorKind::InvalidConfig, "need at least k=" + std::to_string(k) + " samples, got " +
                                                  std::to_string(data.rows()));
    }
}

// Relabels clusters in order of first appearance.
std::vector<int> canonical_labels(const std::vector<int>& raw) {
    std::vector<int> map;
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto r = static_cast<std::size_t>(raw[i]);
        if (r >= map.size()) map.resize(r + 1, -1);
        if (map[r] < 0) map[r] = *std::max_element(map.begin(), map.end()) + 1;
        out[i] = map[r];
    }
    return out;
}

Matrix centroids(const Matrix& data, const std::vector<int>& labels, int k) {
    Matrix c = Matrix::Zero(k, data.cols());
    std::vector<double> count(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        c.row(l) += data.row(i);
        count[static_cast<std::size_t>(l)] += 1.0;
    }
    for (int j = 0; j < k; ++j) c.row(j) /= count[static_cast<std::size_t>(j)];
    return c;
}

}  // namespace

BaselineModel kmeans_fit_from(const Matrix& data, const Vector& weights, const Matrix& initial, int max_iterations) {
    const auto n = data.rows();
    const int k = static_cast<int>(initial.rows());
    if (n == 0 || data.cols() == 0) throw Error(ErrorKind::Shape, "baseline input is empty");
    if (!data.allFinite()) throw Error(ErrorKind::InvalidData, "baseline input contains non-finite values");
    if (k < 1 || initial.cols() != data.cols()) throw Error(ErrorKind::Shape, "initial centers do not match the data");
    if (weights.size() != n) throw Error(ErrorKind::Shape, "weight count differs from row count");
    if (!(weights.array() > 0.0).all() || !weights.allFinite()) {
        throw Error(ErrorKind::InvalidData, "weights must be positive and finite");
    }
    if (max_iterations < 1) throw Error(ErrorKind::InvalidConfig, "max_iterations must be at least 1");

    BaselineModel model;
    model.kind = BaselineKind::KMeans;
    model.k = k;
    model.centers = initial;
    model.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) model.labels[static_cast<std::size_t>(i)] = nearest_row(model.centers, data.row(i));

    for (int t = 1; t <= max_iterations; ++t) {
        // Empty clusters take the row farthest from its center.
        for (int j = 0; j < k; ++j) {
            if (std::find(model.labels.begin(), model.labels.end(), j) != model.labels.end()) continue;
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d = (data.row(i) - model.centers.row(model.labels[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            model.labels[static_cast<std::size_t>(far)] = j;
            model.centers.row(j) = data.row(far);
        }
        Matrix sum = Matrix::Zero(k, data.cols());
        Vector mass = Vector::Zero(k);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int l = model.labels[static_cast<std::size_t>(i)];
            sum.row(l) += weights(i) * data.row(i);
            mass(l) += weights(i);
        }
        for (int j = 0; j < k; ++j) {
            if (mass(j) > 0.0) model.centers.row(j) = sum.row(j) / mass(j);
        }
        double wcss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            wcss += weights(i) * (data.row(i) - model.centers.row(model.labels[static_cast<std::size_t>(i)])).squaredNorm();
        }
        model.objective.push_back(wcss);
        model.iterations = t;

        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int l = nearest_row(model.centers, data.row(i));
            if (l != model.labels[static_cast<std::size_t>(i)]) {
                model.labels[static_cast<std::size_t>(i)] = l;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return model;
}

BaselineModel kmeans_fit(const Matrix& data, int k, std::uint64_t seed, int max_iterations) {
    check_data(data, k);
    return kmeans_fit_from(data, Vector::Ones(data.rows()), sample_initial_centers(data, k, seed), max_iterations);
}

BaselineModel agglomerative_fit(const Matrix& data, int k, Linkage linkage) {
    check_data(data, k);
    const auto n = static_cast<std::size_t>(data.rows());

    // Condensed upper-triangular distance matrix.
    auto slot = [n](std::size_t i, std::size_t j) {
        if (i > j) std::swap(i, j);
        return i * n - i * (i + 1) / 2 + (j - i - 1);
    };
    std::vector<double> dist(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dist[slot(i, j)] = (data.row(static_cast<Eigen::Index>(i)) - data.row(static_cast<Eigen::Index>(j))).norm();
        }
    }

    struct Merge {
        std::size_t a;
        std::size_t b;
        double height;
    };
    std::vector<Merge> merges;
    merges.reserve(n - 1);
    std::vector<double> size(n, 1.0);
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});
    std::vector<std::size_t> chain;

    while (active.size() > 1) {
        if (chain.empty()) chain.push_back(active.front());
        std::size_t x = 0;
        std::size_t y = 0;
        double d_xy = 0.0;
        while (true) {
            x = chain.back();
            // Prefer the previous chain element on ties so the chain terminates.
            std::size_t best = chain.size() >= 2 ? chain[chain.size() - 2] : n;
            double best_d = best < n ? dist[slot(x, best)] : std::numeric_limits<double>::infinity();
            for (std::size_t c : active) {
                if (c == x) continue;
                const double d = dist[slot(x, c)];
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            y = best;
            d_xy = best_d;
            if (chain.size() >= 2 && y == chain[chain.size() - 2]) break;
            chain.push_back(y);
        }
        chain.pop_back();
        chain.pop_back();
        if (x > y) std::swap(x, y);
        merges.push_back({x, y, d_xy});

        // The merged cluster lives in slot y; x leaves the active set.
        const double nx = size[x];
        const double ny = size[y];
        for (std::size_t c : active) {
            if (c == x || c == y) continue;
            const double dx = dist[slot(x, c)];
            const double dy = dist[slot(y, c)];
            double d = 0.0;
            switch (linkage) {
                case Linkage::Single: d = std::min(dx, dy); break;
                case Linkage::Complete: d = std::max(dx, dy); break;
                case Linkage::Average: d = (nx * dx + ny * dy) / (nx + ny); break;
            }
            dist[slot(y, c)] = d;
        }
        size[y] = nx + ny;
        active.erase(std::find(active.begin(), active.end(), x));
    }

    std::stable_sort(merges.begin(), merges.end(), [](const Merge& a, const Merge& b) { return a.height < b.height; });

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (std::size_t m = 0; m + static_cast<std::size_t>(k) < n; ++m) {
        parent[find(merges[m].a)] = find(merges[m].b);
    }

    BaselineModel model;
    model.kind = BaselineKind::Agglomerative;
    model.k = k;
    model.linkage = linkage;
    std::vector<int> roots(n);
    for (std::size_t i = 0; i < n; ++i) roots[i] = static_cast<int>(find(i));
    model.labels = canonical_labels(roots);
    model.centers = centroids(data, model.labels, k);
    model.merge_heights.reserve(merges.size());
    for (const auto& m : merges) model.merge_heights.push_back(m.height);
    return model;
}

namespace {

struct CfNode {
    bool leaf = true;
    std::vector<ClusteringFeature> entries;
    std::vector<std::unique_ptr<CfNode>> children;
};

using NodePair = std::pair<std::unique_ptr<CfNode>, std::unique_ptr<CfNode>>;

ClusteringFeature summary(const CfNode& node) {
    ClusteringFeature total;
    for (const auto& e : node.entries) total += e;
    return total;
}

std::size_t closest_entry(const CfNode& node, const Vector& x) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.entries.size(); ++i) {
        const double d = (node.entries[i].centroid() - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

// Splits an overfull node around its two most distant entries.
NodePair split_node(CfNode& node) {
    const std::size_t count = node.entries.size();
    std::size_t a = 0;
    std::size_t b = 1;
    double far = -1.0;
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = i + 1; j < count; ++j) {
            const double d = (node.entries[i].centroid() - node.entries[j].centroid()).squaredNorm();
            if (d > far) {
                far = d;
                a = i;
                b = j;
            }
        }
    }
    auto left = std::make_unique<CfNode>();
    auto right = std::make_unique<CfNode>();
    left->leaf = right->leaf = node.leaf;
    const Vector ca = node.entries[a].centroid();
    const Vector cb = node.entries[b].centroid();
    for (std::size_t i = 0; i < count; ++i) {
        const Vector c = node.entries[i].centroid();
        const bool to_left = i == a || (i != b && (c - ca).squaredNorm() <= (c - cb).squaredNorm());
        CfNode& dst = to_left ? *left : *right;
        dst.entries.push_back(std::move(node.entries[i]));
        if (!node.leaf) dst.children.push_back(std::move(node.children[i]));
    }
    return {std::move(left), std::move(right)};
}

std::optional<NodePair> insert(CfNode& node, const ClusteringFeature& point, double threshold, std::size_t branching) {
    const Vector x = point.linear_sum;
    if (node.leaf) {
        if (!node.entries.empty()) {
            const std::size_t c = closest_entry(node, x);
            if ((node.entries[c] + point).radius() <= threshold) {
                node.entries[c] += point;
                return std::nullopt;
            }
        }
        node.entries.push_back(point);
    } else {
        const std::size_t c = closest_entry(node, x);
        auto split = insert(*node.children[c], point, threshold, branching);
        if (!split) {
            node.entries[c] += point;
            return std::nullopt;
        }
        node.entries[c] = summary(*split->first);
        node.children[c] = std::move(split->first);
        node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(c) + 1, summary(*split->second));
        node.children.insert(node.children.begin() + static_cast<std::ptrdiff_t>(c) + 1, std::move(split->second));
    }
    if (node.entries.size() > branching) return split_node(node);
    return std::nullopt;
}

void collect_leaves(const CfNode& node, std::vector<ClusteringFeature>& out) {
    if (node.leaf) {
        out.insert(out.end(), node.entries.begin(), node.entries.end());
        return;
    }
    for (const auto& child : node.children) collect_leaves(*child, out);
}

}  // namespace

BaselineModel birch_fit(const Matrix& data, double threshold, int branching, int k, std::uint64_t seed) {
    check_data(data, k);
    if (!(threshold > 0.0)) throw Error(ErrorKind::InvalidConfig, "BIRCH threshold must be positive");
    if (branching < 2) throw Error(ErrorKind::InvalidConfig, "BIRCH branching factor must be at least 2");

    auto root = std::make_unique<CfNode>();
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        auto split = insert(*root, ClusteringFeature::of_point(data.row(i)), threshold,
                            static_cast<std::size_t>(branching));
        if (split) {
            auto top = std::make_unique<CfNode>();
            top->leaf = false;
            top->entries = {summary(*split->first), summary(*split->second)};
            top->children.push_back(std::move(split->first));
            top->children.push_back(std::move(split->second));
            root = std::move(top);
        }
    }

    BaselineModel model;
    model.kind = BaselineKind::Birch;
    model.k = k;
    model.threshold = threshold;
    model.branching = branching;
    collect_leaves(*root, model.subclusters);

    const auto count = static_cast<Eigen::Index>(model.subclusters.size());
    Matrix points(count, data.cols());
    Vector weights(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        points.row(i) = model.subclusters[static_cast<std::size_t>(i)].centroid().transpose();
        weights(i) = model.subclusters[static_cast<std::size_t>(i)].n;
    }
    if (count <= k) {
        model.centers = points;
        model.subcluster_labels.resize(static_cast<std::size_t>(count));
        std::iota(model.subcluster_labels.begin(), model.subcluster_labels.end(), 0);
    } else {
        const BaselineModel global = kmeans_fit_from(points, weights, sample_initial_centers(points, k, seed));
        model.centers = global.centers;
        model.subcluster_labels = global.labels;
        model.iterations = global.iterations;
        model.objective = global.objective;
    }
    model.labels = baseline_predict(model, data);
    return model;
}

std::vector<int> baseline_predict(const BaselineModel& model, const Matrix& data) {
    if (data.rows() > 0 && data.cols() != model.centers.cols()) {
        throw Error(ErrorKind::Shape, "model has dimension " + std::to_string(model.centers.cols()) + ", data has " +
                                          std::to_string(data.cols()));
    }
    std::vector<int> out(static_cast<std::size_t>(data.rows()));
    if (model.kind == BaselineKind::Birch) {
        Matrix sub(static_cast<Eigen::Index>(model.subclusters.size()), model.centers.cols());
        for (std::size_t i = 0; i < model.subclusters.size(); ++i) {
            sub.row(static_cast<Eigen::Index>(i)) = model.subclusters[i].centroid().transpose();
        }
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            out[static_cast<std::size_t>(i)] =
                model.subcluster_labels[static_cast<std::size_t>(nearest_row(sub, data.row(i)))];
        }
        return out;
    }
    for (Eigen::Index i = 0; i < data.rows(); ++i) out[static_cast<std::size_t>(i)] = nearest_row(model.centers, data.row(i));
    return out;
}

BaselineScore evaluate_baseline(const BaselineModel& model, const Matrix& test, const std::vector<int>& train_labels,
                                const std::vector<int>& test_labels) {
    if (model.labels.size() != train_labels.size()) {
        throw Error(ErrorKind::Shape, "training label count differs from the fitted rows");
    }
    if (static_cast<std::size_t>(test.rows()) != test_labels.size()) {
        throw Error(ErrorKind::Shape, "test label count differs from test rows");
    }
    const auto mapping = best_label_mapping(model.labels, train_labels, std::max(model.clusters(), 1));
    return {mapping.mse, mapped_mse(mapping, baseline_predict(model, test), test_labels)};
}

void to_json(nlohmann::json& j, const ClusteringFeature& cf) {
    j = nlohmann::json{{"n", cf.n}, {"linear_sum", vector_to_json(cf.linear_sum)}, {"square_sum", cf.square_sum}};
}

void to_json(nlohmann::json& j, const BaselineModel& m) {
    j = nlohmann::json{{"kind", to_string(m.kind)}, {"k", m.k}, {"centers", matrix_to_json(m.centers)}};
    switch (m.kind) {
        case BaselineKind::KMeans:
            j["iterations"] = m.iterations;
            j["objective"] = m.objective;
            break;
        case BaselineKind::Agglomerative:
            j["linkage"] = to_string(m.linkage);
            break;
        case BaselineKind::Birch:
            j["threshold"] = m.threshold;
            j["branching"] = m.branching;
            j["subclusters"] = m.subclusters.size();
            break;
    }
}

}  // namespace cdf
