#include "cdf/baselines.hpp"
#include "cdf/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

using namespace cdf;

namespace {

Matrix random_points(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix x(n, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    return x;
}

Matrix two_blobs(int per_blob, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    Matrix x(2 * per_blob, 2);
    for (int i = 0; i < 2 * per_blob; ++i) {
        const double off = i < per_blob ? 0.0 : 5.0;
        x(i, 0) = off + g(rng);
        x(i, 1) = g(rng);
    }
    return x;
}

std::vector<int> blob_labels(int per_blob) {
    std::vector<int> l(static_cast<std::size_t>(2 * per_blob), 0);
    std::fill(l.begin() + per_blob, l.end(), 1);
    return l;
}

// Partition as a set of index sets, independent of label numbering.
std::set<std::set<int>> partition(const std::vector<int>& labels) {
    std::map<int, std::set<int>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(static_cast<int>(i));
    std::set<std::set<int>> out;
    for (auto& [l, g] : groups) out.insert(g);
    return out;
}

// Greedy merging with linkage distances recomputed from the raw points.
std::pair<std::set<std::set<int>>, std::vector<double>> naive_agglomerative(const Matrix& x, int k, Linkage linkage) {
    std::vector<std::vector<int>> clusters;
    for (int i = 0; i < x.rows(); ++i) clusters.push_back({i});
    std::vector<double> heights;
    std::set<std::set<int>> cut;
    while (clusters.size() > 1) {
        if (static_cast<int>(clusters.size()) == k) {
            for (const auto& c : clusters) cut.insert(std::set<int>(c.begin(), c.end()));
        }
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0, bb = 0;
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
                for (int i : clusters[a]) {
                    for (int j : clusters[b]) {
                        const double d = (x.row(i) - x.row(j)).norm();
                        lo = std::min(lo, d);
                        hi = std::max(hi, d);
                        sum += d;
                    }
                }
                const double avg = sum / static_cast<double>(clusters[a].size() * clusters[b].size());
                const double d = linkage == Linkage::Single ? lo : linkage == Linkage::Complete ? hi : avg;
                if (d < best) {
                    best = d;
                    ba = a;
                    bb = b;
                }
            }
        }
        heights.push_back(best);
        clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    std::sort(heights.begin(), heights.end());
    return {cut, heights};
}

Matrix naive_lloyd(const Matrix& x, Matrix c) {
    std::vector<int> assign(static_cast<std::size_t>(x.rows()), -1);
    for (int it = 0; it < 1000; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            int best = 0;
            for (Eigen::Index j = 1; j < c.rows(); ++j) {
                if ((x.row(i) - c.row(j)).squaredNorm() < (x.row(i) - c.row(best)).squaredNorm()) best = static_cast<int>(j);
            }
            if (assign[static_cast<std::size_t>(i)] != best) changed = true;
            assign[static_cast<std::size_t>(i)] = best;
        }
        if (!changed) break;
        for (Eigen::Index j = 0; j < c.rows(); ++j) {
            Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(x.cols());
            int n = 0;
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                if (assign[static_cast<std::size_t>(i)] == j) {
                    s += x.row(i);
                    ++n;
                }
            }
            if (n > 0) c.row(j) = s / n;
        }
    }
    return c;
}

}  // namespace

TEST_CASE("k-means matches a naive Lloyd oracle from the same start") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix x = random_points(40, 2, seed);
        const Matrix init = sample_initial_centers(x, 3, seed);
        const BaselineModel m = kmeans_fit_from(x, Vector::Ones(40), init, 300);
        CHECK((m.centers - naive_lloyd(x, init)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("k-means objective never increases") {
    const Matrix x = random_points(200, 3, 4);
    const BaselineModel m = kmeans_fit(x, 4, 9);
    REQUIRE(!m.objective.empty());
    for (std::size_t i = 1; i < m.objective.size(); ++i) CHECK(m.objective[i] <= m.objective[i - 1] + 1e-12);
    CHECK(m.iterations == static_cast<int>(m.objective.size()));
}

TEST_CASE("integer weights equal duplicated rows") {
    const Matrix x = random_points(12, 2, 2);
    Vector w(12);
    std::vector<Eigen::Index> expanded;
    for (Eigen::Index i = 0; i < 12; ++i) {
        w(i) = static_cast<double>(1 + i % 3);
        for (int r = 0; r < 1 + i % 3; ++r) expanded.push_back(i);
    }
    Matrix dup(static_cast<Eigen::Index>(expanded.size()), 2);
    for (std::size_t r = 0; r < expanded.size(); ++r) dup.row(static_cast<Eigen::Index>(r)) = x.row(expanded[r]);
    const Matrix init = x.topRows(2);
    const BaselineModel a = kmeans_fit_from(x, w, init, 300);
    const BaselineModel b = kmeans_fit_from(dup, Vector::Ones(dup.rows()), init, 300);
    CHECK((a.centers - b.centers).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("an empty cluster is reseeded at the farthest row") {
    Matrix x(6, 1);
    x << 0, 0.1, 0.2, 5, 5.1, 9;
    Matrix init(3, 1);
    init << 0.0, 5.0, 100.0;
    const BaselineModel m = kmeans_fit_from(x, Vector::Ones(6), init, 300);
    std::set<int> used(m.labels.begin(), m.labels.end());
    CHECK(used.size() == 3);
    CHECK(m.centers(2, 0) == doctest::Approx(9.0));
}

TEST_CASE("agglomerative clustering matches a naive greedy oracle") {
    for (Linkage linkage : {Linkage::Single, Linkage::Complete, Linkage::Average}) {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const Matrix x = random_points(25, 2, 100 + seed);
            for (int k : {2, 3, 5}) {
                const BaselineModel m = agglomerative_fit(x, k, linkage);
                const auto [cut, heights] = naive_agglomerative(x, k, linkage);
                CHECK(partition(m.labels) == cut);
                REQUIRE(m.merge_heights.size() == heights.size());
                for (std::size_t i = 0; i < heights.size(); ++i) {
                    CHECK(m.merge_heights[i] == doctest::Approx(heights[i]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("agglomerative labels are canonical and centers are centroids") {
    const Matrix x = two_blobs(10, 3);
    const BaselineModel m = agglomerative_fit(x, 2, Linkage::Average);
    CHECK(m.labels.front() == 0);
    CHECK(m.clusters() == 2);
    for (int j = 0; j < 2; ++j) {
        Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(2);
        int n = 0;
        for (std::size_t i = 0; i < m.labels.size(); ++i) {
            if (m.labels[i] == j) {
                s += x.row(static_cast<Eigen::Index>(i));
                ++n;
            }
        }
        CHECK((m.centers.row(j) - s / n).norm() < 1e-12);
    }
    // k = N leaves every point alone
    const BaselineModel all = agglomerative_fit(x.topRows(4), 4, Linkage::Single);
    CHECK(partition(all.labels).size() == 4);
}

TEST_CASE("clustering feature is additive and its radius matches brute force") {
    const Matrix x = random_points(30, 3, 5);
    ClusteringFeature a;
    ClusteringFeature b;
    for (Eigen::Index i = 0; i < 30; ++i) (i < 12 ? a : b) += ClusteringFeature::of_point(x.row(i));
    const ClusteringFeature ab = a + b;
    CHECK(ab.n == 30.0);
    const Vector mean = x.colwise().mean().transpose();
    CHECK((ab.centroid() - mean).norm() < 1e-12);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < 30; ++i) ss += (x.row(i).transpose() - mean).squaredNorm();
    CHECK(ab.radius() == doctest::Approx(std::sqrt(ss / 30.0)).epsilon(1e-10));
    CHECK(ClusteringFeature::of_point(x.row(0)).radius() == 0.0);

    ClusteringFeature wrong = ClusteringFeature::of_point(Eigen::RowVectorXd::Zero(2));
    CHECK_THROWS_AS(wrong += a, Error);
}

TEST_CASE("BIRCH subclusters respect the threshold and summarize every row") {
    const Matrix x = random_points(300, 2, 6);
    const BaselineModel m = birch_fit(x, 0.15, 4, 3, 1);
    double n = 0.0;
    Vector sum = Vector::Zero(2);
    for (const auto& cf : m.subclusters) {
        CHECK(cf.radius() <= 0.15 + 1e-12);
        n += cf.n;
        sum += cf.linear_sum;
    }
    CHECK(n == 300.0);
    CHECK((sum - x.colwise().sum().transpose()).norm() < 1e-9);
    CHECK(m.subcluster_labels.size() == m.subclusters.size());
    CHECK(m.clusters() == 3);
    CHECK(m.labels == baseline_predict(m, x));
}

TEST_CASE("BIRCH with a tiny threshold keeps every point as a subcluster") {
    const Matrix x = random_points(60, 2, 2);
    const BaselineModel m = birch_fit(x, 1e-9, 3, 2, 1);
    CHECK(m.subclusters.size() == 60);
}

TEST_CASE("BIRCH with no more subclusters than k uses them directly") {
    const Matrix x = random_points(20, 2, 3);
    const BaselineModel m = birch_fit(x, 100.0, 10, 2, 0);
    CHECK(m.subclusters.size() == 1);
    CHECK(m.clusters() == 1);
    CHECK(std::all_of(m.labels.begin(), m.labels.end(), [](int l) { return l == 0; }));
}

TEST_CASE("all baselines separate two distant blobs") {
    const Matrix train = two_blobs(30, 1);
    const Matrix test = two_blobs(10, 2);
    const auto ltrain = blob_labels(30);
    const auto ltest = blob_labels(10);
    const std::vector<BaselineModel> models{kmeans_fit(train, 2, 3), agglomerative_fit(train, 2, Linkage::Average),
                                            agglomerative_fit(train, 2, Linkage::Single),
                                            birch_fit(train, 0.5, 10, 2, 3)};
    for (const auto& m : models) {
        const BaselineScore s = evaluate_baseline(m, test, ltrain, ltest);
        CHECK(s.mse_train == 0.0);
        CHECK(s.mse_test == 0.0);
    }
}

TEST_CASE("baseline input validation") {
    const Matrix x = random_points(5, 2, 1);
    CHECK_THROWS_AS(kmeans_fit(x, 1, 0), Error);
    CHECK_THROWS_AS(kmeans_fit(x, 6, 0), Error);
    CHECK_THROWS_AS(agglomerative_fit(Matrix(0, 2), 2), Error);
    CHECK_THROWS_AS(birch_fit(x, 0.0, 5, 2), Error);
    CHECK_THROWS_AS(birch_fit(x, 0.5, 1, 2), Error);
    CHECK_THROWS_AS(kmeans_fit_from(x, -Vector::Ones(5), x.topRows(2)), Error);
    Matrix bad = x;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(kmeans_fit(bad, 2, 0), Error);
    const BaselineModel m = kmeans_fit(x, 2, 0);
    CHECK_THROWS_AS(baseline_predict(m, Matrix::Zero(1, 3)), Error);
    CHECK_THROWS_AS(evaluate_baseline(m, x, {0, 1}, {0, 1, 0, 1, 0}), Error);
    CHECK(linkage_from_string("complete") == Linkage::Complete);
    CHECK_THROWS_AS(linkage_from_string("ward"), Error);
}

TEST_CASE("baseline model JSON carries kind specific fields") {
    const Matrix x = two_blobs(5, 1);
    CHECK(nlohmann::json(kmeans_fit(x, 2, 0)).contains("objective"));
    CHECK(nlohmann::json(agglomerative_fit(x, 2)).at("linkage") == "average");
    CHECK(nlohmann::json(birch_fit(x, 0.5, 5, 2)).at("kind") == "BIRCH");
}
