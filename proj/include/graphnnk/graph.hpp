#ifndef GRAPHNNK_GRAPH_HPP
#define GRAPHNNK_GRAPH_HPP

#include "errors.hpp"
#include "matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace graphnnk {

enum class Split : std::uint8_t { train, val, test };

inline const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

inline Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw InvalidInput("unknown split tag '" + s + "'");
}

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected simple graph with per-node input features.
/// Edges are stored once per undirected pair as (min, max), sorted.
struct Graph {
    std::size_t id = 0;
    std::size_t num_nodes = 0;
    std::vector<Edge> edges;
    Matrix node_features;            // num_nodes x d_in, empty until featurized
    std::vector<long> node_labels;   // native node labels when the dataset ships them; unused by default
    int label = 0;

    std::vector<std::size_t> degrees() const {
        std::vector<std::size_t> deg(num_nodes, 0);
        for (const auto& [u, v] : edges) {
            ++deg[u];
            ++deg[v];
        }
        return deg;
    }
};

/// Drops self-loops, orders each pair (min, max) and removes duplicates.
inline std::vector<Edge> normalize_edges(std::vector<Edge> edges) {
    std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
    for (auto& e : edges)
        if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

struct GraphDataset {
    std::vector<Graph> graphs;
    int num_classes = 0;
    std::size_t feature_dim = 0;
    std::vector<Split> split;   // empty until stratified_split runs
    std::vector<std::string> warnings;

    std::size_t size() const { return graphs.size(); }

    std::vector<std::size_t> indices_of(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == s) out.push_back(i);
        return out;
    }
};

enum class DegreeFeatureMode { one_hot, scalar };

inline DegreeFeatureMode degree_mode_from_string(const std::string& s) {
    if (s == "one_hot") return DegreeFeatureMode::one_hot;
    if (s == "scalar") return DegreeFeatureMode::scalar;
    throw InvalidInput("unknown degree feature mode '" + s + "'");
}

inline const char* to_string(DegreeFeatureMode m) {
    return m == DegreeFeatureMode::one_hot ? "one_hot" : "scalar";
}

inline std::size_t max_degree(const GraphDataset& dataset) {
    std::size_t d_max = 0;
    for (const auto& g : dataset.graphs)
        for (auto d : g.degrees()) d_max = std::max(d_max, d);
    return d_max;
}

/// Replaces node features with a degree encoding. D_max is taken over the whole dataset.
inline GraphDataset assign_degree_features(GraphDataset dataset, DegreeFeatureMode mode) {
    if (dataset.graphs.empty()) throw InvalidInput("assign_degree_features: empty dataset");
    const std::size_t d_max = max_degree(dataset);
    const std::size_t dim = mode == DegreeFeatureMode::one_hot ? d_max + 1 : 1;
    for (auto& g : dataset.graphs) {
        const auto deg = g.degrees();
        g.node_features = Matrix(g.num_nodes, dim);
        for (std::size_t v = 0; v < g.num_nodes; ++v) {
            if (mode == DegreeFeatureMode::one_hot)
                g.node_features(v, deg[v]) = 1.0;
            else
                g.node_features(v, 0) = d_max == 0 ? 0.0 : static_cast<double>(deg[v]) / static_cast<double>(d_max);
        }
    }
    dataset.feature_dim = dim;
    return dataset;
}

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

/// Per-class seeded shuffle, then a class-interleaved ordering cut by the global ratios.
/// Each graph is ranked by (position + 0.5) / class_size inside its shuffled class, so
/// every contiguous cut of the merged order is proportional per class.
/// Classes with fewer than three graphs go entirely to train with a warning.
inline GraphDataset stratified_split(GraphDataset dataset, SplitRatios ratios, std::uint64_t seed) {
    if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw InvalidInput("split ratios must be positive and sum to 1");

    const std::size_t n = dataset.size();
    dataset.split.assign(n, Split::train);

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[dataset.graphs[i].label].push_back(i);

    std::mt19937_64 rng(seed);
    struct Ranked {
        double position;
        int label;
        std::size_t index;
    };
    std::vector<Ranked> order;
    for (auto& [label, members] : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        if (members.size() < 3) {
            dataset.warnings.push_back("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                                       " graphs (< 3 split parts); all assigned to train");
            continue;
        }
        for (std::size_t r = 0; r < members.size(); ++r)
            order.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(members.size()), label, members[r]});
    }
    std::sort(order.begin(), order.end(), [](const Ranked& a, const Ranked& b) {
        if (a.position != b.position) return a.position < b.position;
        return a.label < b.label;
    });

    const auto m = static_cast<double>(order.size());
    const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * m));
    const auto n_val = std::min(order.size() - n_train, static_cast<std::size_t>(std::llround(ratios.val * m)));
    for (std::size_t r = 0; r < order.size(); ++r) {
        Split s = r < n_train ? Split::train : (r < n_train + n_val ? Split::val : Split::test);
        dataset.split[order[r].index] = s;
    }
    return dataset;
}

inline nlohmann::json dataset_summary(const GraphDataset& dataset) {
    std::map<int, std::size_t> histogram;
    std::size_t nodes = 0, edges = 0;
    for (const auto& g : dataset.graphs) {
        ++histogram[g.label];
        nodes += g.num_nodes;
        edges += g.edges.size();
    }
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [label, count] : histogram) classes[std::to_string(label)] = count;
    nlohmann::json out = {
        {"graph_count", dataset.size()},
        {"num_classes", dataset.num_classes},
        {"class_histogram", classes},
        {"node_count", nodes},
        {"edge_count", edges},
        {"max_degree", dataset.graphs.empty() ? 0 : max_degree(dataset)},
        {"feature_dim", dataset.feature_dim},
    };
    if (!dataset.split.empty()) {
        out["split_counts"] = {{"train", dataset.indices_of(Split::train).size()},
                               {"val", dataset.indices_of(Split::val).size()},
                               {"test", dataset.indices_of(Split::test).size()}};
    }
    return out;
}

}  // namespace graphnnk

#endif
