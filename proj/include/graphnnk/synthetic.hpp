#ifndef GRAPHNNK_SYNTHETIC_HPP
#define GRAPHNNK_SYNTHETIC_HPP

#include "graph.hpp"

#include <cstdint>
#include <random>

namespace graphnnk {

inline Graph make_cycle(std::size_t n) {
    Graph g;
    g.num_nodes = n;
    for (std::size_t v = 0; v < n; ++v) g.edges.emplace_back(v, (v + 1) % n);
    g.edges = normalize_edges(std::move(g.edges));
    return g;
}

inline Graph make_star(std::size_t n) {
    Graph g;
    g.num_nodes = n;
    for (std::size_t v = 1; v < n; ++v) g.edges.emplace_back(0, v);
    return g;
}

/// Two-class toy set: label 0 = cycle graphs, label 1 = star graphs,
/// node counts drawn uniformly from [min_nodes, max_nodes]. Graphs are interleaved
/// (cycle, star, cycle, ...) and carry no features yet.
inline GraphDataset make_cycles_vs_stars(std::size_t per_class, std::uint64_t seed, std::size_t min_nodes = 4,
                                         std::size_t max_nodes = 16) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> size(min_nodes, max_nodes);
    GraphDataset ds;
    ds.num_classes = 2;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (int label : {0, 1}) {
            Graph g = label == 0 ? make_cycle(size(rng)) : make_star(size(rng));
            g.label = label;
            g.id = ds.graphs.size();
            ds.graphs.push_back(std::move(g));
        }
    }
    return ds;
}

}  // namespace graphnnk

#endif
