#ifndef GRAPHNNK_TU_FORMAT_HPP
#define GRAPHNNK_TU_FORMAT_HPP

// Reader/writer for the TU graph collection text layout:
//   DS_A.txt                 "i, j" per line, global 1-based node ids, both directions usually listed
//   DS_graph_indicator.txt   line i holds the 1-based graph id of node i
//   DS_graph_labels.txt      line g holds the label of graph g
//   DS_node_labels.txt       optional, line i holds the label of node i

#include "errors.hpp"
#include "graph.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace graphnnk {

namespace detail {

inline std::vector<long> parse_int_tokens(std::string_view line, const std::string& file, std::size_t line_no) {
    std::vector<long> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ',' || line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ',' && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        long value = 0;
        auto token = line.substr(i, j - i);
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size())
            throw FormatError(file + ":" + std::to_string(line_no) + ": non-integer token '" + std::string(token) + "'");
        out.push_back(value);
        i = j;
    }
    return out;
}

/// One record per non-blank line; `arity` tokens expected on each.
inline std::vector<std::vector<long>> read_int_file(const std::filesystem::path& path, std::size_t arity) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open " + path.string());
    std::vector<std::vector<long>> rows;
    std::string line;
    std::size_t line_no = 0;
    const auto name = path.filename().string();
    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = parse_int_tokens(line, name, line_no);
        if (tokens.empty()) continue;
        if (tokens.size() != arity)
            throw FormatError(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(arity) +
                              " integers, found " + std::to_string(tokens.size()));
        rows.push_back(std::move(tokens));
    }
    return rows;
}

// Line numbers of the non-blank records, so errors can point at the file position.
inline std::vector<std::size_t> record_line_numbers(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::vector<std::size_t> lines;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r,") != std::string::npos) lines.push_back(line_no);
    }
    return lines;
}

inline std::string detect_prefix(const std::filesystem::path& dir) {
    const std::string suffix = "_graph_indicator.txt";
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        auto name = entry.path().filename().string();
        if (name.size() > suffix.size() && name.ends_with(suffix)) return name.substr(0, name.size() - suffix.size());
    }
    return dir.filename().string();
}

}  // namespace detail

inline GraphDataset parse_tu_dataset(const std::filesystem::path& directory) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(directory)) throw LoadError("dataset directory not found: " + directory.string());
    const auto prefix = detail::detect_prefix(directory);
    const auto file = [&](const char* stem) { return directory / (prefix + stem); };

    for (const char* stem : {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt"})
        if (!fs::exists(file(stem))) throw LoadError("missing dataset file: " + file(stem).string());

    const auto labels = detail::read_int_file(file("_graph_labels.txt"), 1);
    const auto indicator_path = file("_graph_indicator.txt");
    const auto indicator = detail::read_int_file(indicator_path, 1);
    const auto edges = detail::read_int_file(file("_A.txt"), 2);

    const std::size_t num_graphs = labels.size();
    const std::size_t num_nodes = indicator.size();
    const auto indicator_lines = detail::record_line_numbers(indicator_path);

    std::set<long> distinct_labels;
    for (const auto& l : labels) distinct_labels.insert(l[0]);
    std::map<long, int> remap;
    for (long l : distinct_labels) remap.emplace(l, static_cast<int>(remap.size()));

    GraphDataset ds;
    ds.num_classes = static_cast<int>(remap.size());
    ds.graphs.resize(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        ds.graphs[g].id = g;
        ds.graphs[g].label = remap.at(labels[g][0]);
    }

    // node (0-based global) -> (graph, local index)
    std::vector<std::size_t> node_graph(num_nodes), node_local(num_nodes);
    for (std::size_t v = 0; v < num_nodes; ++v) {
        const long gid = indicator[v][0];
        if (gid < 1 || static_cast<std::size_t>(gid) > num_graphs)
            throw FormatError(indicator_path.filename().string() + ":" + std::to_string(indicator_lines[v]) +
                              ": node " + std::to_string(v + 1) + " references nonexistent graph " +
                              std::to_string(gid));
        auto& g = ds.graphs[static_cast<std::size_t>(gid - 1)];
        node_graph[v] = static_cast<std::size_t>(gid - 1);
        node_local[v] = g.num_nodes++;
    }

    const auto edge_path = file("_A.txt");
    const auto edge_lines = detail::record_line_numbers(edge_path);
    std::vector<std::vector<Edge>> raw(num_graphs);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const long a = edges[e][0], b = edges[e][1];
        const auto where = edge_path.filename().string() + ":" + std::to_string(edge_lines[e]);
        if (a < 1 || b < 1 || static_cast<std::size_t>(a) > num_nodes || static_cast<std::size_t>(b) > num_nodes)
            throw FormatError(where + ": edge references nonexistent node");
        const auto u = static_cast<std::size_t>(a - 1), v = static_cast<std::size_t>(b - 1);
        if (node_graph[u] != node_graph[v]) throw FormatError(where + ": edge crosses graphs");
        raw[node_graph[u]].emplace_back(node_local[u], node_local[v]);
    }
    for (std::size_t g = 0; g < num_graphs; ++g) ds.graphs[g].edges = normalize_edges(std::move(raw[g]));

    if (fs::exists(file("_node_labels.txt"))) {
        const auto node_labels = detail::read_int_file(file("_node_labels.txt"), 1);
        if (node_labels.size() != num_nodes)
            throw FormatError(prefix + "_node_labels.txt: expected " + std::to_string(num_nodes) + " lines");
        for (std::size_t v = 0; v < num_nodes; ++v) {
            auto& g = ds.graphs[node_graph[v]];
            if (g.node_labels.size() < g.num_nodes) g.node_labels.resize(g.num_nodes);
            g.node_labels[node_local[v]] = node_labels[v][0];
        }
    }
    return ds;
}

/// Writes the dataset in TU layout with graphs' nodes numbered consecutively.
/// Each undirected edge is emitted in both directions, as the TU benchmark files do.
inline void write_tu_dataset(const GraphDataset& dataset, const std::filesystem::path& directory,
                             const std::string& prefix) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    std::ofstream a(directory / (prefix + "_A.txt"));
    std::ofstream ind(directory / (prefix + "_graph_indicator.txt"));
    std::ofstream lab(directory / (prefix + "_graph_labels.txt"));
    if (!a || !ind || !lab) throw LoadError("cannot write dataset files in " + directory.string());
    std::size_t offset = 1;
    for (std::size_t g = 0; g < dataset.size(); ++g) {
        const auto& graph = dataset.graphs[g];
        for (std::size_t v = 0; v < graph.num_nodes; ++v) ind << (g + 1) << '\n';
        for (const auto& [u, v] : graph.edges) {
            a << (u + offset) << ", " << (v + offset) << '\n';
            a << (v + offset) << ", " << (u + offset) << '\n';
        }
        lab << graph.label << '\n';
        offset += graph.num_nodes;
    }
}

}  // namespace graphnnk

#endif
