#ifndef GRAPHNNK_NNK_HPP
#define GRAPHNNK_NNK_HPP

// Non-negative kernel regression classifier.
//
// For a query x with candidate neighbors S, find
//     theta* = argmin_{theta >= 0}  1 - 2 theta^T K_Sx + theta^T K_SS theta
// with an active-set method (Cholesky on the working-set block), zero coefficients
// at or below tau_edge, and predict by the convex combination of the surviving
// neighbors' one-hot labels with weights theta_i / sum(theta).

#include "cholesky.hpp"
#include "errors.hpp"
#include "knn.hpp"
#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphnnk {

enum class KernelKind { cosine_shifted, rbf };

NLOHMANN_JSON_SERIALIZE_ENUM(KernelKind, {{KernelKind::cosine_shifted, "cosine_shifted"}, {KernelKind::rbf, "rbf"}})

struct KernelSpec {
    KernelKind kind = KernelKind::cosine_shifted;
    double bandwidth = 1.0;   // rbf only
    double jitter = 1e-8;     // added to the Gram diagonal

    void validate() const {
        if (kind == KernelKind::rbf && !(bandwidth > 0.0)) throw InvalidInput("rbf bandwidth must be positive");
        if (!(jitter >= 0.0)) throw InvalidInput("kernel jitter must be non-negative");
    }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(KernelSpec, kind, bandwidth, jitter)

/// cosine_shifted: (1 + cos(a, b)) / 2.  rbf: exp(-|a - b|^2 / (2 bandwidth^2)).  Both lie in [0, 1].
inline double kernel_eval(const KernelSpec& spec, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("kernel_eval: dimension mismatch");
    if (spec.kind == KernelKind::rbf) {
        const double d = euclidean_distance(a, b);
        return std::exp(-d * d / (2.0 * spec.bandwidth * spec.bandwidth));
    }
    const double na = l2_norm(a), nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw NumericError("kernel_eval: zero vector under cosine_shifted kernel");
    const double cos = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
    return 0.5 * (1.0 + cos);
}

struct NnkProblem {
    Matrix gram;                          // K_SS, jitter on the diagonal
    std::vector<double> query_similarity; // K_Sx
    std::vector<std::size_t> neighbor_rows;
    std::vector<std::size_t> neighbor_ids;   // source graph ids
    std::vector<int> neighbor_labels;

    std::size_t size() const { return query_similarity.size(); }
};

inline NnkProblem build_problem(const KernelSpec& spec, std::span<const double> query_vector,
                                const NeighborList& neighbors, const NeighborIndex& index) {
    if (neighbors.ids.empty()) throw InvalidInput("build_problem: empty neighbor list");
    const std::size_t k = neighbors.ids.size();
    NnkProblem p;
    p.gram = Matrix(k, k);
    p.query_similarity.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t row = neighbors.ids[i];
        p.neighbor_rows.push_back(row);
        p.neighbor_ids.push_back(index.graph_ids[row]);
        p.neighbor_labels.push_back(index.labels[row]);
        try {
            p.query_similarity[i] = kernel_eval(spec, index.vectors.row(row), query_vector);
            p.gram(i, i) = 1.0 + spec.jitter;
            for (std::size_t j = 0; j < i; ++j)
                p.gram(i, j) = p.gram(j, i) = kernel_eval(spec, index.vectors.row(row), index.vectors.row(neighbors.ids[j]));
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (neighbor graph " + std::to_string(index.graph_ids[row]) + ")");
        }
    }
    return p;
}

struct SolverSettings {
    double tolerance = 1e-9;
    double tau_edge = 1e-10;
};

struct NnkSolution {
    std::vector<double> theta_raw;      // solver output before thresholding
    std::vector<double> theta;          // entries <= tau_edge zeroed
    std::vector<std::size_t> active_set;   // positions with theta > tau_edge
    std::vector<double> weights;           // theta over active_set, normalized to sum 1
    std::vector<int> labels;               // neighbor labels, all k positions
    double objective = 0.0;
    double kkt_residual = 0.0;             // of theta_raw
    std::size_t iterations = 0;

    std::size_t active_count() const { return active_set.size(); }
};

/// 1 - 2 theta^T K_Sx + theta^T K_SS theta
inline double nnk_objective(const NnkProblem& p, std::span<const double> theta) {
    double q = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (theta[i] == 0.0) continue;
        lin += theta[i] * p.query_similarity[i];
        for (std::size_t j = 0; j < p.size(); ++j) q += theta[i] * p.gram(i, j) * theta[j];
    }
    return 1.0 - 2.0 * lin + q;
}

/// K_Sx - K_SS theta, i.e. minus half the objective gradient.
inline std::vector<double> nnk_descent_direction(const NnkProblem& p, std::span<const double> theta) {
    std::vector<double> g(p.query_similarity);
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (theta[j] == 0.0) continue;
        for (std::size_t i = 0; i < p.size(); ++i) g[i] -= p.gram(i, j) * theta[j];
    }
    return g;
}

/// Largest violation of: theta >= 0; (K theta - K_Sx)_i >= 0 where theta_i = 0; = 0 where theta_i > 0.
inline double kkt_residual(const NnkProblem& p, std::span<const double> theta) {
    const auto g = nnk_descent_direction(p, theta);
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (theta[i] < 0.0) r = std::max(r, -theta[i]);
        r = std::max(r, theta[i] > 0.0 ? std::abs(g[i]) : std::max(0.0, g[i]));
    }
    return r;
}

namespace detail {

// Solves K_PP s = K_Px on the working set, escalating diagonal jitter twice (x10) on
// Cholesky breakdown. One step of iterative refinement tightens the residual.
inline std::vector<double> solve_working_set(const NnkProblem& p, const std::vector<std::size_t>& working,
                                             double base_jitter) {
    const std::size_t m = working.size();
    Matrix sub(m, m);
    std::vector<double> rhs(m);
    for (std::size_t a = 0; a < m; ++a) {
        rhs[a] = p.query_similarity[working[a]];
        for (std::size_t b = 0; b < m; ++b) sub(a, b) = p.gram(working[a], working[b]);
    }
    double extra = 0.0;
    for (int attempt = 0; attempt < 3; ++attempt) {
        Matrix shifted = sub;
        for (std::size_t a = 0; a < m; ++a) shifted(a, a) += extra;
        if (auto l = cholesky_factor(shifted)) {
            auto s = cholesky_solve(*l, rhs);
            std::vector<double> r(rhs);
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b) r[a] -= shifted(a, b) * s[b];
            const auto ds = cholesky_solve(*l, r);
            for (std::size_t a = 0; a < m; ++a) s[a] += ds[a];
            return s;
        }
        extra = extra == 0.0 ? std::max(base_jitter, 1e-12) * 10.0 : extra * 10.0;
    }
    throw SolverError("Cholesky breakdown on a working set of size " + std::to_string(m) + " after jitter escalation",
                      working);
}

}  // namespace detail

/// Active-set (Lawson-Hanson style) solver for the non-negative kernel QP.
inline NnkSolution solve_nnqp(const NnkProblem& problem, const SolverSettings& settings = {}) {
    const std::size_t k = problem.size();
    if (k == 0) throw InvalidInput("solve_nnqp: empty problem");
    const double tol = settings.tolerance;
    const double base_jitter = problem.gram(0, 0) - 1.0;
    const std::size_t max_iterations = 10 * k;

    std::vector<double> theta(k, 0.0);
    std::vector<std::size_t> working;
    std::vector<bool> in_working(k, false), blocked(k, false);
    std::size_t iterations = 0;

    auto bump = [&] {
        if (++iterations > max_iterations)
            throw ConvergenceError("solve_nnqp: iteration cap " + std::to_string(max_iterations) + " exceeded",
                                   kkt_residual(problem, theta));
    };

    while (true) {
        const auto g = nnk_descent_direction(problem, theta);
        std::size_t enter = k;
        double best = tol;
        for (std::size_t i = 0; i < k; ++i)
            if (!in_working[i] && !blocked[i] && g[i] > best) {
                best = g[i];
                enter = i;
            }
        if (enter == k) break;

        working.push_back(enter);
        in_working[enter] = true;
        bool first = true;
        while (true) {
            bump();
            const auto s = detail::solve_working_set(problem, working, base_jitter);
            if (std::all_of(s.begin(), s.end(), [](double v) { return v > 0.0; })) {
                for (std::size_t a = 0; a < working.size(); ++a) theta[working[a]] = s[a];
                std::fill(blocked.begin(), blocked.end(), false);
                break;
            }
            if (first && s.back() <= 0.0) {
                // round-off made the entering coordinate unusable; leave theta as is
                working.pop_back();
                in_working[enter] = false;
                blocked[enter] = true;
                break;
            }
            first = false;
            // step toward s until the first coordinate hits zero
            double alpha = 1.0;
            std::size_t leaving = working.size();
            for (std::size_t a = 0; a < working.size(); ++a) {
                const double t = theta[working[a]];
                if (s[a] <= 0.0) {
                    const double step = t / (t - s[a]);
                    if (step < alpha) {
                        alpha = step;
                        leaving = a;
                    }
                }
            }
            for (std::size_t a = 0; a < working.size(); ++a) {
                double& t = theta[working[a]];
                t += alpha * (s[a] - t);
                if (a == leaving || t <= 0.0) t = 0.0;
            }
            std::vector<std::size_t> kept;
            for (auto i : working) {
                if (theta[i] > 0.0)
                    kept.push_back(i);
                else
                    in_working[i] = false;
            }
            working = std::move(kept);
            if (working.empty()) break;
        }
    }

    NnkSolution sol;
    sol.iterations = iterations;
    sol.theta_raw = theta;
    sol.kkt_residual = kkt_residual(problem, theta);
    sol.labels = problem.neighbor_labels;
    sol.theta = theta;
    for (std::size_t i = 0; i < k; ++i) {
        if (sol.theta[i] <= settings.tau_edge)
            sol.theta[i] = 0.0;
        else
            sol.active_set.push_back(i);
    }
    double total = 0.0;
    for (auto i : sol.active_set) total += sol.theta[i];
    for (auto i : sol.active_set) sol.weights.push_back(sol.theta[i] / total);
    sol.objective = nnk_objective(problem, sol.theta);
    return sol;
}

/// Class probabilities p_c = sum of weights of active neighbors labelled c.
inline std::vector<double> nnk_predict(const NnkSolution& solution, std::size_t num_classes) {
    if (solution.active_set.empty()) throw EmptyActiveSetError("nnk_predict: empty active set");
    std::vector<double> p(num_classes, 0.0);
    for (std::size_t a = 0; a < solution.active_set.size(); ++a) {
        const int label = solution.labels[solution.active_set[a]];
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
            throw InvalidInput("nnk_predict: neighbor label " + std::to_string(label) + " out of range");
        p[static_cast<std::size_t>(label)] += solution.weights[a];
    }
    return p;
}

/// Kernel ratio interval test: K_jk < K_ij / K_ik < 1 / K_jk.
inline bool kri_check(double k_ij, double k_ik, double k_jk) {
    if (k_ik == 0.0) throw InvalidInput("kri_check: K_ik = 0 makes the ratio undefined");
    for (double v : {k_ij, k_ik, k_jk})
        if (!(v > 0.0 && v <= 1.0)) throw InvalidInput("kri_check: kernel values must lie in (0, 1]");
    const double ratio = k_ij / k_ik;
    return k_jk < ratio && ratio < 1.0 / k_jk;
}

struct KriStats {
    std::size_t pairs = 0;
    std::size_t satisfied = 0;
};

/// Checks every pair of active neighbors against the query (diagnostic only).
inline KriStats kri_diagnostics(const NnkProblem& problem, const NnkSolution& solution) {
    KriStats stats;
    const auto& act = solution.active_set;
    for (std::size_t a = 0; a < act.size(); ++a)
        for (std::size_t b = a + 1; b < act.size(); ++b) {
            const double k_ij = problem.query_similarity[act[a]];
            const double k_ik = problem.query_similarity[act[b]];
            const double k_jk = std::min(1.0, problem.gram(act[a], act[b]));
            if (k_ij <= 0.0 || k_ik <= 0.0 || k_jk <= 0.0) continue;
            ++stats.pairs;
            if (kri_check(k_ij, k_ik, k_jk)) ++stats.satisfied;
        }
    return stats;
}

struct ExplanationEntry {
    std::size_t graph_id = 0;
    int label = 0;
    double weight = 0.0;
    double similarity = 0.0;
};

struct Explanation {
    std::size_t query_id = 0;
    std::size_t predicted = 0;
    std::vector<double> probabilities;
    std::vector<ExplanationEntry> neighbors;   // active set, descending weight
    bool fallback = false;                     // nearest-neighbor label used (empty active set)
};

inline Explanation explain(std::size_t query_id, const NnkSolution& solution, const NnkProblem& problem,
                           std::size_t num_classes) {
    Explanation ex;
    ex.query_id = query_id;
    for (std::size_t a = 0; a < solution.active_set.size(); ++a) {
        const auto i = solution.active_set[a];
        ex.neighbors.push_back({problem.neighbor_ids[i], problem.neighbor_labels[i], solution.weights[a],
                                problem.query_similarity[i]});
    }
    std::stable_sort(ex.neighbors.begin(), ex.neighbors.end(),
                     [](const ExplanationEntry& x, const ExplanationEntry& y) { return x.weight > y.weight; });
    if (solution.active_set.empty()) {
        // first neighbor is the nearest one
        ex.fallback = true;
        ex.probabilities.assign(num_classes, 0.0);
        ex.probabilities[static_cast<std::size_t>(problem.neighbor_labels.front())] = 1.0;
    } else {
        ex.probabilities = nnk_predict(solution, num_classes);
    }
    ex.predicted = argmax(ex.probabilities);
    return ex;
}

inline nlohmann::json to_json(const Explanation& ex) {
    nlohmann::json neighbors = nlohmann::json::array();
    for (const auto& n : ex.neighbors)
        neighbors.push_back({{"id", n.graph_id}, {"label", n.label}, {"weight", n.weight}, {"similarity", n.similarity}});
    nlohmann::json j = {{"query_id", ex.query_id}, {"predicted", ex.predicted}, {"probs", ex.probabilities},
                        {"neighbors", neighbors}};
    if (ex.fallback) j["fallback"] = "nearest_neighbor";
    return j;
}

}  // namespace graphnnk

#endif
