#ifndef GRAPHNNK_KNN_HPP
#define GRAPHNNK_KNN_HPP

#include "errors.hpp"
#include "matrix.hpp"
#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace graphnnk {

enum class Metric { euclidean, cosine };

NLOHMANN_JSON_SERIALIZE_ENUM(Metric, {{Metric::euclidean, "euclidean"}, {Metric::cosine, "cosine"}})

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Exact brute-force nearest-neighbor index over the training rows of an EmbeddingSet.
struct NeighborIndex {
    Matrix vectors;
    std::vector<int> labels;
    std::vector<std::size_t> graph_ids;
    Metric metric = Metric::euclidean;
    std::vector<double> norms;   // filled for cosine

    std::size_t size() const { return vectors.rows(); }
    std::size_t dim() const { return vectors.cols(); }

    double distance(std::size_t row, std::span<const double> x, double x_norm) const {
        if (metric == Metric::euclidean) return euclidean_distance(vectors.row(row), x);
        return 1.0 - dot(vectors.row(row), x) / (norms[row] * x_norm);
    }
};

struct NeighborList {
    std::vector<std::size_t> ids;   // index rows
    std::vector<double> distances;  // non-decreasing
};

inline NeighborIndex build_index(const EmbeddingSet& embeddings, Metric metric = Metric::euclidean) {
    NeighborIndex index;
    index.metric = metric;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < embeddings.size(); ++i)
        if (embeddings.split[i] == Split::train) rows.push_back(i);
    if (rows.empty()) throw InvalidInput("build_index: no training rows");

    index.vectors = Matrix(rows.size(), embeddings.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto src = embeddings.vectors.row(rows[r]);
        std::copy(src.begin(), src.end(), index.vectors.row(r).begin());
        index.labels.push_back(embeddings.labels[rows[r]]);
        index.graph_ids.push_back(embeddings.graph_ids[rows[r]]);
        if (metric == Metric::cosine) {
            const double n = l2_norm(src);
            if (n == 0.0)
                throw InvalidInput("build_index: zero vector at row " + std::to_string(rows[r]) + " (graph " +
                                   std::to_string(embeddings.graph_ids[rows[r]]) + ") under cosine metric");
            index.norms.push_back(n);
        }
    }
    return index;
}

/// The k closest rows (all rows if k > N), ties broken by smaller row index.
inline NeighborList query(const NeighborIndex& index, std::span<const double> x, std::size_t k) {
    if (k < 1) throw InvalidInput("query: k must be >= 1");
    if (x.size() != index.dim())
        throw ShapeError("query: dimension " + std::to_string(x.size()) + " vs index " + std::to_string(index.dim()));
    for (double v : x)
        if (!std::isfinite(v)) throw NumericError("query: non-finite query vector");
    double x_norm = 1.0;
    if (index.metric == Metric::cosine) {
        x_norm = l2_norm(x);
        if (x_norm == 0.0) throw NumericError("query: zero query vector under cosine metric");
    }

    const std::size_t n = index.size();
    std::vector<std::pair<double, std::size_t>> all(n);
    for (std::size_t r = 0; r < n; ++r) all[r] = {index.distance(r, x, x_norm), r};
    k = std::min(k, n);
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());

    NeighborList out;
    for (std::size_t i = 0; i < k; ++i) {
        out.ids.push_back(all[i].second);
        out.distances.push_back(all[i].first);
    }
    return out;
}

}  // namespace graphnnk

#endif
