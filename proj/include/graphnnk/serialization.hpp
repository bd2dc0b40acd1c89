#ifndef GRAPHNNK_SERIALIZATION_HPP
#define GRAPHNNK_SERIALIZATION_HPP

// Checkpoint (versioned JSON) and embedding (JSON lines) files.
// nlohmann::json prints doubles with the shortest round-tripping decimal form,
// so both formats reload bit-identical values.

#include "errors.hpp"
#include "gin.hpp"
#include "trainer.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace graphnnk {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointInfo {
    std::size_t epoch = 0;
    double val_metric = 0.0;
};

inline nlohmann::json checkpoint_to_json(const GinModel& model, const CheckpointInfo& info) {
    nlohmann::json params = nlohmann::json::array();
    auto add = [&](const std::string& name, std::span<const double> p, std::size_t rows, std::size_t cols) {
        params.push_back({{"name", name}, {"shape", {rows, cols}}, {"data", std::vector<double>(p.begin(), p.end())}});
    };
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const auto prefix = "layer" + std::to_string(k);
        for (std::size_t j = 0; j < model.layers[k].mlp.size(); ++j) {
            const auto& d = model.layers[k].mlp[j];
            const auto dense = prefix + ".mlp" + std::to_string(j);
            add(dense + ".weight", d.weight.flat(), d.weight.rows(), d.weight.cols());
            add(dense + ".bias", d.bias, d.bias.size(), 1);
        }
        add(prefix + ".epsilon", std::span(&model.layers[k].epsilon, 1), 1, 1);
    }
    add("head.weight", model.head.weight.flat(), model.head.weight.rows(), model.head.weight.cols());
    add("head.bias", model.head.bias, model.head.bias.size(), 1);
    return {{"format", "graphnnk-checkpoint"},
            {"version", kCheckpointVersion},
            {"config", model.config},
            {"seed", model.config.seed},
            {"input_dim", model.input_dim},
            {"num_classes", model.num_classes},
            {"epoch", info.epoch},
            {"val_metric", info.val_metric},
            {"parameters", params}};
}

inline GinModel checkpoint_from_json(const nlohmann::json& j, CheckpointInfo* info = nullptr) {
    try {
        if (j.at("format") != "graphnnk-checkpoint") throw FormatError("not a graphnnk checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw FormatError("unsupported checkpoint version " + j.at("version").dump());
        const auto config = j.at("config").get<GinConfig>();
        std::mt19937_64 unused(0);
        GinModel model = initialize_model(config, j.at("input_dim").get<std::size_t>(),
                                          j.at("num_classes").get<std::size_t>(), unused);
        const auto& params = j.at("parameters");
        std::size_t next = 0;
        visit_parameters(
            [&](const std::string& name, std::span<double> p) {
                if (next >= params.size()) throw FormatError("checkpoint is missing parameter " + name);
                const auto& entry = params[next++];
                if (entry.at("name") != name)
                    throw FormatError("checkpoint parameter order mismatch: expected " + name + ", found " +
                                      entry.at("name").get<std::string>());
                const auto& data = entry.at("data");
                if (data.size() != p.size()) throw FormatError("checkpoint parameter " + name + " has wrong size");
                for (std::size_t i = 0; i < p.size(); ++i) p[i] = data[i].get<double>();
            },
            model);
        if (next != params.size()) throw FormatError("checkpoint has unexpected extra parameters");
        if (info) {
            info->epoch = j.at("epoch").get<std::size_t>();
            info->val_metric = j.at("val_metric").get<double>();
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    out << text;
}

inline void save_checkpoint(const std::filesystem::path& path, const GinModel& model, const CheckpointInfo& info) {
    write_text_file(path, checkpoint_to_json(model, info).dump(1) + "\n");
}

inline GinModel load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr) {
    if (!std::filesystem::exists(path)) throw StateError("checkpoint not found: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j, info);
}

inline std::string embeddings_to_jsonl(const EmbeddingSet& set) {
    std::string out;
    for (std::size_t i = 0; i < set.size(); ++i) {
        auto row = set.vectors.row(i);
        nlohmann::json rec = {{"graph_id", set.graph_ids[i]},
                              {"split", to_string(set.split[i])},
                              {"label", set.labels[i]},
                              {"vector", std::vector<double>(row.begin(), row.end())}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

inline EmbeddingSet embeddings_from_jsonl(const std::string& text) {
    EmbeddingSet set;
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            set.graph_ids.push_back(rec.at("graph_id").get<std::size_t>());
            set.split.push_back(split_from_string(rec.at("split").get<std::string>()));
            set.labels.push_back(rec.at("label").get<int>());
            rows.push_back(rec.at("vector").get<std::vector<double>>());
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("embeddings line " + std::to_string(line_no) + ": " + e.what());
        }
        if (rows.back().size() != rows.front().size())
            throw FormatError("embeddings line " + std::to_string(line_no) + ": inconsistent vector dimension");
    }
    set.vectors = Matrix(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), set.vectors.row(i).begin());
    return set;
}

/// 64-bit FNV-1a, used to fingerprint artifact bytes in reports.
inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace graphnnk

#endif
