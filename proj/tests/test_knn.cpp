#include <graphnnk/knn.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace graphnnk;

namespace {

EmbeddingSet make_set(const std::vector<std::vector<double>>& rows, const std::vector<Split>& split = {}) {
    EmbeddingSet e;
    e.vectors = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), e.vectors.row(i).begin());
        e.labels.push_back(static_cast<int>(i % 2));
        e.graph_ids.push_back(100 + i);
        e.split.push_back(split.empty() ? Split::train : split[i]);
    }
    return e;
}

}  // namespace

TEST(BuildIndex, CountsTrainRowsOnly) {
    const auto e = make_set({{0, 0}, {1, 0}, {2, 0}, {3, 0}}, {Split::train, Split::val, Split::train, Split::test});
    const auto idx = build_index(e);
    EXPECT_EQ(idx.size(), 2u);
    EXPECT_EQ(idx.graph_ids, (std::vector<std::size_t>{100, 102}));
    EXPECT_EQ(build_index(make_set({{0, 0}, {3, 0}, {0, 4}})).size(), 3u);
}

TEST(BuildIndex, Errors) {
    EXPECT_THROW(build_index(make_set({{1, 0}}, {Split::test})), InvalidInput);
    EXPECT_THROW(build_index(make_set({{1, 0}, {0, 0}}), Metric::cosine), InvalidInput);
    const auto idx = build_index(make_set({{3, 4}}), Metric::cosine);
    EXPECT_NEAR(idx.norms[0], 5.0, 1e-12);
}

TEST(Query, PythagoreanExample) {
    const auto idx = build_index(make_set({{0, 0}, {3, 0}, {0, 4}}));
    const auto r = query(idx, std::vector<double>{0, 0}, 2);
    EXPECT_EQ(r.ids, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(r.distances, (std::vector<double>{0.0, 3.0}));
    const auto all = query(idx, std::vector<double>{0, 0}, 10);
    EXPECT_EQ(all.ids.size(), 3u);
}

TEST(Query, TiesPreferSmallerRow) {
    const auto idx = build_index(make_set({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));
    const auto r = query(idx, std::vector<double>{0, 0}, 3);
    EXPECT_EQ(r.ids, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Query, CosineDistance) {
    const auto idx = build_index(make_set({{1, 0}, {0, 2}, {-3, 0}}), Metric::cosine);
    const auto r = query(idx, std::vector<double>{5, 0}, 3);
    EXPECT_EQ(r.ids, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_NEAR(r.distances[1], 1.0, 1e-12);
    EXPECT_NEAR(r.distances[2], 2.0, 1e-12);
}

TEST(Query, Errors) {
    const auto idx = build_index(make_set({{0, 0}, {3, 0}}));
    EXPECT_THROW(query(idx, std::vector<double>{NAN, 0}, 1), NumericError);
    EXPECT_THROW(query(idx, std::vector<double>{0, 0}, 0), InvalidInput);
    EXPECT_THROW(query(idx, std::vector<double>{0}, 1), ShapeError);
}

TEST(Query, MatchesFullSortOracle) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::vector<double>> rows(200, std::vector<double>(16));
        for (auto& r : rows)
            for (auto& v : r) v = n01(rng);
        // plant exact duplicates to exercise tie-breaks
        rows[150] = rows[3];
        rows[199] = rows[3];
        const auto e = make_set(rows);
        const auto idx = build_index(e);
        for (int q = 0; q < 10; ++q) {
            std::vector<double> x(16);
            for (auto& v : x) v = n01(rng);
            if (q == 0) x = rows[3];
            const auto got = query(idx, x, 50);
            EXPECT_EQ(got.ids, oracle::knn_full_sort(e.vectors, x, 50));
            EXPECT_TRUE(std::is_sorted(got.distances.begin(), got.distances.end()));
        }
    }
}

TEST(Query, KthDistanceMonotoneInK) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    std::vector<std::vector<double>> rows(60, std::vector<double>(5));
    for (auto& r : rows)
        for (auto& v : r) v = n01(rng);
    const auto idx = build_index(make_set(rows));
    std::vector<double> x(5, 0.1);
    double prev = -1.0;
    for (std::size_t k = 1; k <= 60; ++k) {
        const double kth = query(idx, x, k).distances.back();
        EXPECT_GE(kth, prev);
        prev = kth;
    }
}

TEST(Query, MetricIsSymmetric) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 50; ++t) {
        std::vector<double> a(7), b(7);
        for (auto& v : a) v = n01(rng);
        for (auto& v : b) v = n01(rng);
        EXPECT_NEAR(euclidean_distance(a, b), euclidean_distance(b, a), 1e-12);
        const auto ia = build_index(make_set({a}), Metric::cosine);
        const auto ib = build_index(make_set({b}), Metric::cosine);
        EXPECT_NEAR(query(ia, b, 1).distances[0], query(ib, a, 1).distances[0], 1e-12);
    }
}
