#ifndef GRAPHNNK_TRAINER_HPP
#define GRAPHNNK_TRAINER_HPP

#include "errors.hpp"
#include "gin.hpp"
#include "graph.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace graphnnk {

struct AdamSettings {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct EpochRecord {
    std::size_t epoch = 0;   // 1-based
    double train_loss = 0.0;
    double val_accuracy = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainState {
    GinModel model;   // last snapshot
    GinModel adam_m;
    GinModel adam_v;
    std::size_t adam_step = 0;
    std::size_t epoch = 0;
    double best_val_metric = -1.0;
    std::size_t best_epoch = 0;
    std::optional<GinModel> best_checkpoint;
    std::mt19937_64 rng;
    std::vector<EpochRecord> curve;
};

inline void adam_update(GinModel& model, const GinModel& grad, GinModel& m, GinModel& v, std::size_t step,
                        double learning_rate, const AdamSettings& adam = {}) {
    const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(step));
    const bool learn_eps = model.config.epsilon_mode == EpsilonMode::learnable;
    visit_parameters(
        [&](const std::string& name, std::span<double> p, std::span<const double> gp, std::span<double> mp,
            std::span<double> vp) {
            if (!learn_eps && name.ends_with(".epsilon")) return;
            for (std::size_t i = 0; i < p.size(); ++i) {
                mp[i] = adam.beta1 * mp[i] + (1.0 - adam.beta1) * gp[i];
                vp[i] = adam.beta2 * vp[i] + (1.0 - adam.beta2) * gp[i] * gp[i];
                p[i] -= learning_rate * (mp[i] / c1) / (std::sqrt(vp[i] / c2) + adam.eps);
            }
        },
        model, grad, m, v);
}

inline std::size_t predict_supervised(const GinModel& model, const Graph& graph) {
    const auto fwd = gin_forward(model, graph);
    return argmax(softmax_head(model, fwd.graph_embedding));
}

inline double accuracy_on(const GinModel& model, const GraphDataset& dataset, const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    std::size_t correct = 0;
    for (auto i : idx)
        if (predict_supervised(model, dataset.graphs[i]) == static_cast<std::size_t>(dataset.graphs[i].label))
            ++correct;
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

inline TrainState make_train_state(const GraphDataset& dataset, const GinConfig& config) {
    config.validate();
    TrainState state;
    state.rng.seed(config.seed);
    state.model = initialize_model(config, dataset.feature_dim, static_cast<std::size_t>(dataset.num_classes),
                                   state.rng);
    state.adam_m = zeros_like(state.model);
    state.adam_v = zeros_like(state.model);
    return state;
}

/// Runs one epoch of shuffled mini-batch Adam over the train split and records validation accuracy.
inline void train_epoch(TrainState& state, const GraphDataset& dataset) {
    auto order = dataset.indices_of(Split::train);
    auto val = dataset.indices_of(Split::val);
    const auto& config = state.model.config;
    std::shuffle(order.begin(), order.end(), state.rng);

    double loss_sum = 0.0;
    GinModel grad = zeros_like(state.model);
    const std::size_t batch = config.batch_size;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
        const std::size_t end = std::min(order.size(), start + batch);
        visit_parameters([](const std::string&, std::span<double> p) { std::fill(p.begin(), p.end(), 0.0); }, grad);
        double batch_loss = 0.0;
        for (std::size_t i = start; i < end; ++i) {
            const auto& g = dataset.graphs[order[i]];
            batch_loss += loss_and_gradient(state.model, g, static_cast<std::size_t>(g.label), grad, true, &state.rng);
        }
        if (!std::isfinite(batch_loss))
            throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(state.epoch + 1) +
                               ", batch " + std::to_string(b));
        const double inv = 1.0 / static_cast<double>(end - start);
        visit_parameters([&](const std::string&, std::span<double> p) {
            for (auto& v : p) v *= inv;
        }, grad);
        ++state.adam_step;
        adam_update(state.model, grad, state.adam_m, state.adam_v, state.adam_step, config.learning_rate);
        loss_sum += batch_loss;
    }

    ++state.epoch;
    const double val_acc = accuracy_on(state.model, dataset, val);
    state.curve.push_back({state.epoch, loss_sum / static_cast<double>(std::max<std::size_t>(1, order.size())), val_acc});
    // strict improvement only: ties keep the earlier epoch
    if (val_acc > state.best_val_metric) {
        state.best_val_metric = val_acc;
        state.best_epoch = state.epoch;
        state.best_checkpoint = state.model;
    }
}

using EpochCallback = std::function<void(const TrainState&)>;

/// Trains the encoder and softmax head on the train split for config.epochs epochs.
inline TrainState train(const GraphDataset& dataset, const GinConfig& config, const EpochCallback& on_epoch = {}) {
    if (dataset.split.size() != dataset.size()) throw InvalidInput("train: dataset has no split assignment");
    if (dataset.indices_of(Split::train).empty()) throw InvalidInput("train: empty train split");
    if (dataset.indices_of(Split::val).empty()) throw InvalidInput("train: empty validation split");
    TrainState state = make_train_state(dataset, config);
    for (std::size_t e = 0; e < config.epochs; ++e) {
        train_epoch(state, dataset);
        if (on_epoch) on_epoch(state);
    }
    return state;
}

enum class CheckpointKind { best, last };

inline const char* to_string(CheckpointKind k) { return k == CheckpointKind::best ? "best" : "last"; }

inline CheckpointKind checkpoint_from_string(const std::string& s) {
    if (s == "best") return CheckpointKind::best;
    if (s == "last") return CheckpointKind::last;
    throw InvalidInput("unknown checkpoint '" + s + "' (expected best or last)");
}

struct EmbeddingSet {
    Matrix vectors;   // N x d
    std::vector<int> labels;
    std::vector<std::size_t> graph_ids;
    std::vector<Split> split;

    std::size_t size() const { return vectors.rows(); }
    std::size_t dim() const { return vectors.cols(); }

    friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

/// Dropout-free forward pass over every graph, rows in graph-id order.
inline EmbeddingSet export_embeddings(const GinModel& model, const GraphDataset& dataset) {
    EmbeddingSet out;
    out.vectors = Matrix(dataset.size(), model.config.hidden_dim);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& g = dataset.graphs[i];
        const auto fwd = gin_forward(model, g);
        for (std::size_t c = 0; c < fwd.graph_embedding.size(); ++c) {
            if (!std::isfinite(fwd.graph_embedding[c]))
                throw NumericError("non-finite embedding for graph " + std::to_string(g.id));
            out.vectors(i, c) = fwd.graph_embedding[c];
        }
        out.labels.push_back(g.label);
        out.graph_ids.push_back(g.id);
        out.split.push_back(dataset.split.empty() ? Split::train : dataset.split[i]);
    }
    return out;
}

inline const GinModel& select_checkpoint(const TrainState& state, CheckpointKind which) {
    if (which == CheckpointKind::last) return state.model;
    if (!state.best_checkpoint) throw StateError("best checkpoint requested but none was recorded");
    return *state.best_checkpoint;
}

inline EmbeddingSet export_embeddings(const TrainState& state, const GraphDataset& dataset, CheckpointKind which) {
    return export_embeddings(select_checkpoint(state, which), dataset);
}

}  // namespace graphnnk

#endif
