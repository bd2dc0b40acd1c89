#include <graphnnk/nnk.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace graphnnk;

namespace {

NnkProblem manual_problem(const Matrix& gram, std::vector<double> sim, std::vector<int> labels) {
    NnkProblem p;
    p.gram = gram;
    p.query_similarity = std::move(sim);
    p.neighbor_labels = std::move(labels);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.neighbor_rows.push_back(i);
        p.neighbor_ids.push_back(10 + i);
    }
    return p;
}

EmbeddingSet train_set(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
    EmbeddingSet e;
    e.vectors = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), e.vectors.row(i).begin());
        e.labels.push_back(labels[i]);
        e.graph_ids.push_back(i);
        e.split.push_back(Split::train);
    }
    return e;
}

NeighborList first_n(std::size_t n) {
    NeighborList l;
    for (std::size_t i = 0; i < n; ++i) {
        l.ids.push_back(i);
        l.distances.push_back(0.0);
    }
    return l;
}

void expect_kkt(const NnkProblem& p, const NnkSolution& s, double tol) {
    const auto g = nnk_descent_direction(p, s.theta_raw);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_GE(s.theta_raw[i], 0.0);
        if (s.theta_raw[i] > 0.0)
            EXPECT_LE(std::abs(g[i]), tol) << "active " << i;
        else
            EXPECT_LE(g[i], tol) << "inactive " << i;
    }
}

}  // namespace

TEST(Kernel, SelfSimilarityIsOne) {
    const std::vector<double> a{0.3, -2.0, 1.0};
    EXPECT_NEAR(kernel_eval({KernelKind::cosine_shifted}, a, a), 1.0, 1e-15);
    EXPECT_EQ(kernel_eval({KernelKind::rbf, 0.7}, a, a), 1.0);
}

TEST(Kernel, OrthogonalCosineIsHalf) {
    EXPECT_DOUBLE_EQ(kernel_eval({KernelKind::cosine_shifted}, std::vector<double>{1, 0}, std::vector<double>{0, 3}), 0.5);
    EXPECT_DOUBLE_EQ(kernel_eval({KernelKind::cosine_shifted}, std::vector<double>{1, 0}, std::vector<double>{-2, 0}), 0.0);
}

TEST(Kernel, RbfAtSqrtTwoBandwidth) {
    const double h = 0.8;
    const std::vector<double> a{0, 0}, b{h * std::sqrt(2.0), 0};
    EXPECT_NEAR(kernel_eval({KernelKind::rbf, h}, a, b), std::exp(-1.0), 1e-12);
    EXPECT_NEAR(std::exp(-1.0), 0.3679, 1e-4);
}

TEST(Kernel, ZeroVectorUnderCosine) {
    EXPECT_THROW(kernel_eval({}, std::vector<double>{0, 0}, std::vector<double>{1, 0}), NumericError);
}

TEST(BuildProblem, SingleNeighborEqualToQuery) {
    const auto idx = build_index(train_set({{1, 2}}, {0}));
    const auto p = build_problem({}, std::vector<double>{1, 2}, first_n(1), idx);
    EXPECT_DOUBLE_EQ(p.gram(0, 0), 1.0 + 1e-8);
    EXPECT_NEAR(p.query_similarity[0], 1.0, 1e-15);
}

TEST(BuildProblem, DuplicateNeighbors) {
    const auto idx = build_index(train_set({{1, 2}, {1, 2}}, {0, 1}));
    const auto p = build_problem({}, std::vector<double>{0, 1}, first_n(2), idx);
    EXPECT_NEAR(p.gram(0, 1), 1.0, 1e-15);
    EXPECT_EQ(p.gram(0, 1), p.gram(1, 0));
    EXPECT_EQ(p.neighbor_labels, (std::vector<int>{0, 1}));
    const auto s = solve_nnqp(p);
    EXPECT_GE(s.active_count(), 1u);
}

TEST(BuildProblem, ZeroRowNamesNeighbor) {
    const auto idx = build_index(train_set({{1, 2}, {0, 0}}, {0, 1}));
    try {
        build_problem({}, std::vector<double>{1, 1}, first_n(2), idx);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("neighbor graph 1"), std::string::npos) << e.what();
    }
}

TEST(SolveNnqp, SingleNeighborExactReconstruction) {
    const auto s = solve_nnqp(manual_problem(Matrix::identity(1), {1.0}, {0}));
    EXPECT_EQ(s.theta, (std::vector<double>{1.0}));
    EXPECT_EQ(s.weights, (std::vector<double>{1.0}));
    EXPECT_EQ(s.objective, 0.0);
}

TEST(SolveNnqp, DiagonalSystem) {
    const auto s = solve_nnqp(manual_problem(Matrix::identity(2), {0.6, 0.2}, {0, 1}));
    EXPECT_NEAR(s.theta[0], 0.6, 1e-15);
    EXPECT_NEAR(s.theta[1], 0.2, 1e-15);
    EXPECT_NEAR(s.weights[0], 0.75, 1e-15);
    EXPECT_NEAR(s.weights[1], 0.25, 1e-15);
}

TEST(SolveNnqp, MatchesBothOraclesOnRandomFiveByFive) {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 20; ++t) {
        const auto p = oracle::random_problem(rng, 5, 3, 1.0, 1e-8);
        const auto s = solve_nnqp(p);
        const auto enumerated = oracle::enumerate_optimum(p).theta;
        const auto pgd = oracle::projected_gradient(p);
        for (std::size_t i = 0; i < 5; ++i) {
            EXPECT_NEAR(s.theta_raw[i], enumerated[i], 1e-6);
            EXPECT_NEAR(s.theta_raw[i], pgd[i], 1e-6);
        }
    }
}

TEST(SolveNnqp, NegativeUnconstrainedEntryBecomesInactive) {
    // neighbor 2 is close to neighbor 0 but far from the query: unconstrained weight is negative
    Matrix k(3, 3);
    const double g[3][3] = {{1.0, 0.2, 0.9}, {0.2, 1.0, 0.3}, {0.9, 0.3, 1.0}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k(i, j) = g[i][j];
    const auto p = manual_problem(k, {0.9, 0.5, 0.6}, {0, 1, 1});
    const Eigen::MatrixXd ke = oracle::to_eigen(k);
    const Eigen::Vector3d unconstrained = ke.ldlt().solve(Eigen::Vector3d(0.9, 0.5, 0.6));
    ASSERT_LT(unconstrained(2), 0.0);
    const auto s = solve_nnqp(p);
    EXPECT_EQ(s.theta[2], 0.0);
    const auto best = oracle::enumerate_optimum(p);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.theta[i], best.theta[i], 1e-9);
    EXPECT_EQ(s.active_set, (std::vector<std::size_t>{0, 1}));
}

TEST(SolveNnqp, OracleEquivalenceSmallK) {
    std::mt19937_64 rng(5);
    for (std::size_t k = 2; k <= 6; ++k)
        for (int t = 0; t < 20; ++t) {
            const auto p = oracle::random_problem(rng, k, 3, 1.0);
            const auto s = solve_nnqp(p);
            const auto all = oracle::enumerate_feasible(p);
            const auto best = oracle::enumerate_optimum(p);
            for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(s.theta_raw[i], best.theta[i], 1e-6);
            const double obj = nnk_objective(p, s.theta_raw);
            for (const auto& c : all) EXPECT_LE(obj, c.objective + 1e-9);
        }
}

TEST(SolveNnqp, KktHoldsAtFifty) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 40; ++t) {
        const auto kind = t % 2 ? KernelKind::rbf : KernelKind::cosine_shifted;
        const auto p = oracle::random_problem(rng, 50, 16, 4.0, 1e-8, kind);
        const auto s = solve_nnqp(p);
        expect_kkt(p, s, 1e-9);
        EXPECT_LE(s.active_count(), 50u);
        EXPECT_LE(s.iterations, 500u);
    }
}

TEST(SolveNnqp, ThresholdZeroesTinyCoefficients) {
    const auto s = solve_nnqp(manual_problem(Matrix::identity(3), {0.5, 1e-11, 0.25}, {0, 1, 0}), {1e-12, 1e-10});
    EXPECT_GT(s.theta_raw[1], 0.0);
    EXPECT_EQ(s.theta[1], 0.0);
    EXPECT_EQ(s.active_set, (std::vector<std::size_t>{0, 2}));
    EXPECT_NEAR(s.weights[0] + s.weights[1], 1.0, 1e-12);
}

TEST(SolveNnqp, NoPositiveSimilarityGivesEmptyActiveSet) {
    const auto s = solve_nnqp(manual_problem(Matrix::identity(2), {0.0, 0.0}, {0, 1}));
    EXPECT_TRUE(s.active_set.empty());
    EXPECT_THROW(nnk_predict(s, 2), EmptyActiveSetError);
    const auto ex = explain(7, s, manual_problem(Matrix::identity(2), {0.0, 0.0}, {1, 0}), 2);
    EXPECT_TRUE(ex.fallback);
    EXPECT_EQ(ex.predicted, 1u);
}

TEST(SolveNnqp, CholeskyBreakdownReportsWorkingSet) {
    // exact duplicates without jitter: the singular 2x2 block is rescued by escalation
    Matrix k(2, 2, 1.0);
    EXPECT_NO_THROW(solve_nnqp(manual_problem(k, {1.0, 1.0}, {0, 0})));
    Matrix bad(1, 1, -1.0);
    try {
        solve_nnqp(manual_problem(bad, {1.0}, {0}));
        FAIL();
    } catch (const SolverError& e) {
        EXPECT_EQ(e.working_set(), (std::vector<std::size_t>{0}));
    }
}

TEST(NnkPredict, ConvexCombination) {
    NnkSolution s;
    s.theta = {0.3, 0.1};
    s.active_set = {0, 1};
    s.weights = {0.75, 0.25};
    s.labels = {0, 1};
    const auto p = nnk_predict(s, 2);
    EXPECT_EQ(p, (std::vector<double>{0.75, 0.25}));
    EXPECT_EQ(argmax(p), 0u);
    const auto sol = solve_nnqp(manual_problem(Matrix::identity(2), {0.3, 0.1}, {0, 1}));
    EXPECT_NEAR(sol.weights[0], 0.75, 1e-12);
}

TEST(NnkPredict, UnanimousNeighborhood) {
    const auto s = solve_nnqp(manual_problem(Matrix::identity(3), {0.3, 0.1, 0.4}, {1, 1, 1}));
    EXPECT_EQ(nnk_predict(s, 2), (std::vector<double>{0.0, 1.0}));
}

TEST(NnkPredict, TiesGoToSmallerClass) {
    const auto s = solve_nnqp(manual_problem(Matrix::identity(2), {0.5, 0.5}, {1, 0}));
    EXPECT_EQ(argmax(nnk_predict(s, 2)), 0u);
}

TEST(NnkPredict, ProbabilitiesAreConvex) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 50; ++t) {
        const auto p = oracle::random_problem(rng, 20, 4, 1.5);
        const auto probs = nnk_predict(solve_nnqp(p), 2);
        EXPECT_GE(*std::min_element(probs.begin(), probs.end()), 0.0);
        EXPECT_NEAR(probs[0] + probs[1], 1.0, 1e-9);
    }
}

TEST(NnkPredict, DuplicatingActiveNeighborKeepsProbabilities) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 20; ++t) {
        std::vector<std::vector<double>> rows(12, std::vector<double>(4));
        std::vector<int> labels;
        for (auto& r : rows) {
            for (auto& v : r) v = n01(rng);
            labels.push_back(static_cast<int>(labels.size() % 2));
        }
        std::vector<double> q(4);
        for (auto& v : q) v = n01(rng);
        const KernelSpec spec{KernelKind::rbf, 1.5};
        const auto base_idx = build_index(train_set(rows, labels));
        const auto base_p = build_problem(spec, q, first_n(rows.size()), base_idx);
        const auto base = solve_nnqp(base_p);
        ASSERT_FALSE(base.active_set.empty());
        const std::size_t dup = base.active_set.front();
        rows.push_back(rows[dup]);
        labels.push_back(labels[dup]);
        const auto idx = build_index(train_set(rows, labels));
        const auto s = solve_nnqp(build_problem(spec, q, first_n(rows.size()), idx));
        const auto a = nnk_predict(base, 2), b = nnk_predict(s, 2);
        EXPECT_NEAR(a[0], b[0], 1e-6);
        EXPECT_NEAR(a[1], b[1], 1e-6);
    }
}

TEST(NnkSparsity, ClusteredDataPrunesNeighbors) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n01;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < 50; ++i) {
            std::vector<double> r(8);
            for (std::size_t d = 0; d < r.size(); ++d) r[d] = (d == static_cast<std::size_t>(c) ? 4.0 : 0.0) + 0.3 * n01(rng);
            rows.push_back(r);
            labels.push_back(c % 2);
        }
    const auto idx = build_index(train_set(rows, labels));
    double total = 0;
    const int queries = 100;
    for (int q = 0; q < queries; ++q) {
        std::vector<double> x(8);
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = (d == static_cast<std::size_t>(q % 4) ? 4.0 : 0.0) + 0.3 * n01(rng);
        const auto nl = query(idx, x, 50);
        const auto s = solve_nnqp(build_problem({}, x, nl, idx));
        EXPECT_LE(s.active_count(), 50u);
        total += static_cast<double>(s.active_count());
    }
    EXPECT_LT(total / queries, 50.0);
}

TEST(Kri, Examples) {
    EXPECT_TRUE(kri_check(0.8, 0.9, 0.5));
    EXPECT_FALSE(kri_check(0.8, 0.9, 1.0));
    EXPECT_FALSE(kri_check(0.9, 0.3, 0.5));
    EXPECT_THROW(kri_check(0.5, 0.0, 0.5), InvalidInput);
    EXPECT_THROW(kri_check(1.5, 0.5, 0.5), InvalidInput);
}

TEST(Kri, DiagnosticRateOnGaussianData) {
    // Reported, not asserted against a threshold: the interval characterization is kernel dependent.
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n01;
    std::vector<std::vector<double>> rows(300, std::vector<double>(2));
    std::vector<int> labels(300, 0);
    for (auto& r : rows)
        for (auto& v : r) v = n01(rng);
    const auto idx = build_index(train_set(rows, labels));
    const KernelSpec spec{KernelKind::rbf, 0.5};
    std::size_t all_pass = 0, solved = 0;
    KriStats total;
    for (int q = 0; q < 200; ++q) {
        std::vector<double> x{n01(rng), n01(rng)};
        const auto nl = query(idx, x, 20);
        const auto p = build_problem(spec, x, nl, idx);
        const auto s = solve_nnqp(p);
        const auto st = kri_diagnostics(p, s);
        total.pairs += st.pairs;
        total.satisfied += st.satisfied;
        all_pass += st.pairs == st.satisfied;
        ++solved;
    }
    std::printf("KRI: %zu/%zu queries with every active pair inside the interval; %zu/%zu pairs\n", all_pass, solved,
                total.satisfied, total.pairs);
    EXPECT_GT(total.pairs, 0u);
}

TEST(Explain, SortedByWeight) {
    NnkSolution s;
    s.theta = {0.3, 0.0, 0.7};
    s.active_set = {0, 2};
    s.weights = {0.3, 0.7};
    s.labels = {1, 0, 0};
    const auto p = manual_problem(Matrix::identity(3), {0.4, 0.1, 0.8}, {1, 0, 0});
    const auto ex = explain(42, s, p, 2);
    ASSERT_EQ(ex.neighbors.size(), 2u);
    EXPECT_EQ(ex.neighbors[0].weight, 0.7);
    EXPECT_EQ(ex.neighbors[0].graph_id, 12u);
    EXPECT_EQ(ex.neighbors[0].similarity, 0.8);
    EXPECT_EQ(ex.neighbors[1].label, 1);
    EXPECT_EQ(ex.predicted, 0u);
    const auto j = to_json(ex);
    EXPECT_EQ(j["query_id"], 42);
    EXPECT_EQ(j["neighbors"].size(), 2u);
}

TEST(Explain, SingleActiveNeighbor) {
    const auto p = manual_problem(Matrix::identity(1), {1.0}, {1});
    const auto ex = explain(3, solve_nnqp(p), p, 2);
    ASSERT_EQ(ex.neighbors.size(), 1u);
    EXPECT_EQ(ex.neighbors[0].weight, 1.0);
    EXPECT_EQ(ex.probabilities, (std::vector<double>{0.0, 1.0}));
}
