#ifndef GRAPHNNK_GIN_HPP
#define GRAPHNNK_GIN_HPP

// Graph Isomorphism Network encoder with a linear softmax head, written out by hand:
// forward pass, cross-entropy loss and its reverse-mode gradient.
//
// Layer k:  h_v <- MLP_k((1 + eps_k) * h_v + sum_{u in N(v)} h_u)
// MLP_k:    mlp_depth dense layers, activation (+ dropout while training) between them,
//           no activation after the last one.
// Readout:  sum or mean over final-layer node states, then logits = W g + b.

#include "errors.hpp"
#include "graph.hpp"
#include "matrix.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphnnk {

enum class EpsilonMode { learnable, fixed };
enum class Pooling { sum, mean };
enum class Activation { relu, identity };

NLOHMANN_JSON_SERIALIZE_ENUM(EpsilonMode, {{EpsilonMode::learnable, "learnable"}, {EpsilonMode::fixed, "fixed"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Pooling, {{Pooling::sum, "sum"}, {Pooling::mean, "mean"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Activation, {{Activation::relu, "relu"}, {Activation::identity, "identity"}})

/// Encoder and optimizer hyperparameters. Defaults are the NCI1 settings
/// (5 layers, width 128, dropout 0.5, lr 1e-3, batch 128).
struct GinConfig {
    std::size_t num_layers = 5;
    std::size_t hidden_dim = 128;
    std::size_t mlp_depth = 2;
    double dropout = 0.5;
    EpsilonMode epsilon_mode = EpsilonMode::learnable;
    double fixed_epsilon = 0.0;
    Pooling pooling = Pooling::sum;
    Activation activation = Activation::relu;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_layers < 1) throw InvalidInput("num_layers must be >= 1");
        if (hidden_dim < 1) throw InvalidInput("hidden_dim must be >= 1");
        if (mlp_depth < 1) throw InvalidInput("mlp_depth must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidInput("dropout must lie in [0, 1)");
        if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be positive");
        if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
    }

    friend bool operator==(const GinConfig&, const GinConfig&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GinConfig, num_layers, hidden_dim, mlp_depth, dropout, epsilon_mode,
                                                fixed_epsilon, pooling, activation, learning_rate, batch_size, epochs,
                                                seed)

struct Dense {
    Matrix weight;              // out x in
    std::vector<double> bias;   // out

    friend bool operator==(const Dense&, const Dense&) = default;
};

struct GinLayer {
    std::vector<Dense> mlp;
    double epsilon = 0.0;

    friend bool operator==(const GinLayer&, const GinLayer&) = default;
};

struct GinModel {
    GinConfig config;
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    std::vector<GinLayer> layers;
    Dense head;   // num_classes x hidden_dim

    friend bool operator==(const GinModel&, const GinModel&) = default;
};

/// Calls f(name, span, span, ...) for every parameter block of the given
/// identically-shaped models, in a fixed order. Epsilons appear as 1-element spans.
template <class F, class First, class... Rest>
void visit_parameters(F&& f, First& first, Rest&... rest) {
    for (std::size_t k = 0; k < first.layers.size(); ++k) {
        const auto prefix = "layer" + std::to_string(k);
        for (std::size_t j = 0; j < first.layers[k].mlp.size(); ++j) {
            const auto dense = prefix + ".mlp" + std::to_string(j);
            f(dense + ".weight", first.layers[k].mlp[j].weight.flat(), rest.layers[k].mlp[j].weight.flat()...);
            f(dense + ".bias", std::span(first.layers[k].mlp[j].bias), std::span(rest.layers[k].mlp[j].bias)...);
        }
        f(prefix + ".epsilon", std::span(&first.layers[k].epsilon, 1), std::span(&rest.layers[k].epsilon, 1)...);
    }
    f(std::string("head.weight"), first.head.weight.flat(), rest.head.weight.flat()...);
    f(std::string("head.bias"), std::span(first.head.bias), std::span(rest.head.bias)...);
}

inline std::size_t parameter_count(const GinModel& model) {
    std::size_t n = 0;
    visit_parameters([&](const std::string&, std::span<const double> p) { n += p.size(); }, model);
    return n;
}

/// Same shapes as `model`, every parameter zero.
inline GinModel zeros_like(const GinModel& model) {
    GinModel z = model;
    visit_parameters([](const std::string&, std::span<double> p) { std::fill(p.begin(), p.end(), 0.0); }, z);
    return z;
}

/// Glorot-uniform weights, zero biases, epsilons at 0 (or the fixed value).
inline GinModel initialize_model(const GinConfig& config, std::size_t input_dim, std::size_t num_classes,
                                 std::mt19937_64& rng) {
    config.validate();
    if (input_dim == 0) throw InvalidInput("input feature dimension is 0; assign node features first");
    if (num_classes < 2) throw InvalidInput("need at least two classes");

    auto make_dense = [&](std::size_t in, std::size_t out) {
        Dense d{Matrix(out, in), std::vector<double>(out, 0.0)};
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (auto& w : d.weight.flat()) w = u(rng);
        return d;
    };

    GinModel m;
    m.config = config;
    m.input_dim = input_dim;
    m.num_classes = num_classes;
    for (std::size_t k = 0; k < config.num_layers; ++k) {
        GinLayer layer;
        for (std::size_t j = 0; j < config.mlp_depth; ++j) {
            const std::size_t in = (k == 0 && j == 0) ? input_dim : config.hidden_dim;
            layer.mlp.push_back(make_dense(in, config.hidden_dim));
        }
        layer.epsilon = config.epsilon_mode == EpsilonMode::fixed ? config.fixed_epsilon : 0.0;
        m.layers.push_back(std::move(layer));
    }
    m.head = make_dense(config.hidden_dim, num_classes);
    return m;
}

/// Intermediate values kept for the backward pass.
struct ForwardCache {
    struct Layer {
        Matrix input;                   // h^{(k-1)}
        std::vector<Matrix> dense_in;   // input of each dense layer; dense_in[0] is the aggregated z
        std::vector<Matrix> pre_act;    // affine output of each hidden dense layer
        std::vector<Matrix> mask;       // dropout scale per hidden unit (empty when not training)
    };
    std::vector<Layer> layers;
};

struct ForwardResult {
    Matrix node_embeddings;
    std::vector<double> graph_embedding;
};

namespace detail {

// z = (1 + eps) h + A h
inline Matrix aggregate(const Matrix& h, const std::vector<Edge>& edges, double epsilon) {
    Matrix z(h.rows(), h.cols());
    const double self = 1.0 + epsilon;
    for (std::size_t v = 0; v < h.rows(); ++v) {
        auto zr = z.row(v);
        auto hr = h.row(v);
        for (std::size_t c = 0; c < h.cols(); ++c) zr[c] = self * hr[c];
    }
    for (const auto& [u, v] : edges) {
        auto zu = z.row(u), zv = z.row(v);
        auto hu = h.row(u), hv = h.row(v);
        for (std::size_t c = 0; c < h.cols(); ++c) {
            zu[c] += hv[c];
            zv[c] += hu[c];
        }
    }
    return z;
}

inline void check_input(const GinModel& model, const Graph& graph) {
    const auto& x = graph.node_features;
    if (x.rows() != graph.num_nodes || x.cols() != model.input_dim)
        throw ShapeError("layer 0: node features are " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                         ", expected " + std::to_string(graph.num_nodes) + "x" + std::to_string(model.input_dim));
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const std::size_t expected_in = k == 0 ? model.input_dim : model.config.hidden_dim;
        const auto& mlp = model.layers[k].mlp;
        if (mlp.empty() || mlp.front().weight.cols() != expected_in)
            throw ShapeError("layer " + std::to_string(k) + ": MLP input dimension does not match " +
                             std::to_string(expected_in));
    }
}

}  // namespace detail

/// Runs the encoder on one graph. Dropout is active only when `training` is set,
/// in which case `rng` must be provided.
inline ForwardResult gin_forward(const GinModel& model, const Graph& graph, bool training = false,
                                 std::mt19937_64* rng = nullptr, ForwardCache* cache = nullptr) {
    detail::check_input(model, graph);
    const bool dropout = training && model.config.dropout > 0.0;
    if (dropout && rng == nullptr) throw InvalidInput("gin_forward: training with dropout needs an rng");
    const double keep = 1.0 - model.config.dropout;
    std::bernoulli_distribution keep_unit(keep);

    if (cache) cache->layers.assign(model.layers.size(), {});
    Matrix h = graph.node_features;
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const auto& layer = model.layers[k];
        Matrix x = detail::aggregate(h, graph.edges, layer.epsilon);
        ForwardCache::Layer* lc = cache ? &cache->layers[k] : nullptr;
        if (lc) lc->input = std::move(h);
        for (std::size_t j = 0; j < layer.mlp.size(); ++j) {
            const auto& dense = layer.mlp[j];
            if (lc) lc->dense_in.push_back(x);
            Matrix a = affine(x, dense.weight, dense.bias);
            if (j + 1 == layer.mlp.size()) {
                x = std::move(a);
                break;
            }
            if (lc) lc->pre_act.push_back(a);
            Matrix mask;
            if (dropout) mask = Matrix(a.rows(), a.cols());
            for (std::size_t i = 0; i < a.size(); ++i) {
                double& v = a.flat()[i];
                if (model.config.activation == Activation::relu && v < 0.0) v = 0.0;
                if (dropout) {
                    const double s = keep_unit(*rng) ? 1.0 / keep : 0.0;
                    mask.flat()[i] = s;
                    v *= s;
                }
            }
            if (lc) lc->mask.push_back(std::move(mask));
            x = std::move(a);
        }
        h = std::move(x);
    }

    ForwardResult out;
    out.graph_embedding.assign(h.cols(), 0.0);
    for (std::size_t v = 0; v < h.rows(); ++v)
        for (std::size_t c = 0; c < h.cols(); ++c) out.graph_embedding[c] += h(v, c);
    if (model.config.pooling == Pooling::mean && h.rows() > 0)
        for (auto& g : out.graph_embedding) g /= static_cast<double>(h.rows());
    out.node_embeddings = std::move(h);
    return out;
}

inline std::vector<double> head_logits(const GinModel& model, std::span<const double> graph_embedding) {
    if (graph_embedding.size() != model.head.weight.cols())
        throw ShapeError("head: embedding has dimension " + std::to_string(graph_embedding.size()) + ", expected " +
                         std::to_string(model.head.weight.cols()));
    std::vector<double> logits(model.num_classes);
    for (std::size_t c = 0; c < logits.size(); ++c)
        logits[c] = model.head.bias[c] + dot(model.head.weight.row(c), graph_embedding);
    return logits;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    double top = -std::numeric_limits<double>::infinity();
    for (double l : logits) {
        if (!std::isfinite(l)) throw NumericError("softmax: non-finite logit");
        top = std::max(top, l);
    }
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) total += (p[c] = std::exp(logits[c] - top));
    for (auto& v : p) v /= total;
    return p;
}

/// Class probabilities of the supervised linear head.
inline std::vector<double> softmax_head(const GinModel& model, std::span<const double> graph_embedding) {
    for (double v : graph_embedding)
        if (!std::isfinite(v)) throw NumericError("softmax_head: non-finite embedding");
    return softmax(head_logits(model, graph_embedding));
}

inline std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

// log-sum-exp written as log1p over the non-maximal terms so confidently
// classified graphs keep full relative precision in the loss.
inline double cross_entropy(std::span<const double> logits, std::size_t label) {
    std::size_t top = 0;
    for (std::size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[top]) top = c;
    double rest = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c)
        if (c != top) rest += std::exp(logits[c] - logits[top]);
    return std::log1p(rest) + (logits[top] - logits[label]);
}

/// Cross-entropy loss of one graph. Adds d(loss)/d(param) into `grad`, which must be
/// shaped like `model` (see zeros_like).
inline double loss_and_gradient(const GinModel& model, const Graph& graph, std::size_t label, GinModel& grad,
                                bool training = false, std::mt19937_64* rng = nullptr) {
    if (label >= model.num_classes) throw InvalidInput("label out of range");
    ForwardCache cache;
    const auto fwd = gin_forward(model, graph, training, rng, &cache);
    const auto logits = head_logits(model, fwd.graph_embedding);
    const double loss = cross_entropy(logits, label);

    auto dlogits = softmax(logits);
    dlogits[label] -= 1.0;

    const std::size_t d_h = model.config.hidden_dim;
    std::vector<double> dg(d_h, 0.0);
    for (std::size_t c = 0; c < model.num_classes; ++c) {
        grad.head.bias[c] += dlogits[c];
        auto gw = grad.head.weight.row(c);
        auto w = model.head.weight.row(c);
        for (std::size_t i = 0; i < d_h; ++i) {
            gw[i] += dlogits[c] * fwd.graph_embedding[i];
            dg[i] += dlogits[c] * w[i];
        }
    }

    const std::size_t n = graph.num_nodes;
    const double pool_scale = model.config.pooling == Pooling::mean && n > 0 ? 1.0 / static_cast<double>(n) : 1.0;
    Matrix dh(n, d_h);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t i = 0; i < d_h; ++i) dh(v, i) = dg[i] * pool_scale;

    for (std::size_t k = model.layers.size(); k-- > 0;) {
        const auto& layer = model.layers[k];
        auto& glayer = grad.layers[k];
        const auto& lc = cache.layers[k];
        Matrix dout = std::move(dh);
        for (std::size_t j = layer.mlp.size(); j-- > 0;) {
            const auto& dense = layer.mlp[j];
            auto& gdense = glayer.mlp[j];
            const Matrix& x = lc.dense_in[j];
            const std::size_t in = dense.weight.cols(), out = dense.weight.rows();
            Matrix dx(n, in);
            for (std::size_t v = 0; v < n; ++v) {
                auto dy = dout.row(v);
                auto xr = x.row(v);
                auto dxr = dx.row(v);
                for (std::size_t o = 0; o < out; ++o) {
                    const double g = dy[o];
                    if (g == 0.0) continue;
                    gdense.bias[o] += g;
                    auto gw = gdense.weight.row(o);
                    auto w = dense.weight.row(o);
                    for (std::size_t i = 0; i < in; ++i) {
                        gw[i] += g * xr[i];
                        dxr[i] += g * w[i];
                    }
                }
            }
            if (j > 0) {
                // back through dropout and activation of hidden layer j-1
                const Matrix& pre = lc.pre_act[j - 1];
                const Matrix& mask = lc.mask[j - 1];
                for (std::size_t i = 0; i < dx.size(); ++i) {
                    double& g = dx.flat()[i];
                    if (!mask.empty()) g *= mask.flat()[i];
                    if (model.config.activation == Activation::relu && pre.flat()[i] <= 0.0) g = 0.0;
                }
            }
            dout = std::move(dx);
        }
        // dout = dL/dz, z = (1 + eps) h + A h
        const Matrix& h_prev = lc.input;
        if (model.config.epsilon_mode == EpsilonMode::learnable) {
            double de = 0.0;
            for (std::size_t i = 0; i < dout.size(); ++i) de += dout.flat()[i] * h_prev.flat()[i];
            glayer.epsilon += de;
        }
        if (k == 0) break;
        dh = detail::aggregate(dout, graph.edges, layer.epsilon);
    }
    return loss;
}

inline double loss_only(const GinModel& model, const Graph& graph, std::size_t label) {
    const auto fwd = gin_forward(model, graph);
    return cross_entropy(head_logits(model, fwd.graph_embedding), label);
}

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t compared = 0;
    std::size_t skipped = 0;   // entries below the absolute threshold
};

/// Compares analytic gradients with central differences for every scalar parameter,
/// dropout disabled. Entries where both |analytic| and |numeric| fall below
/// `abs_threshold` are skipped. The rounding error of the difference quotient,
/// bounded by 4 * machine-eps * (|loss| + 1) / step, is subtracted from each discrepancy.
inline GradientCheckResult gradient_check(const GinModel& model, const Graph& graph, std::size_t label,
                                          double step = 1e-5, double abs_threshold = 1e-8) {
    GinModel analytic = zeros_like(model);
    const double loss = loss_and_gradient(model, graph, label, analytic);
    const bool check_eps = model.config.epsilon_mode == EpsilonMode::learnable;
    const double rounding = 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(loss) + 1.0) / step;

    GradientCheckResult result;
    GinModel probe = model;
    visit_parameters(
        [&](const std::string& name, std::span<double> p, std::span<double> g) {
            if (name.ends_with(".epsilon") && !check_eps) return;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double saved = p[i];
                p[i] = saved + step;
                const double up = loss_only(probe, graph, label);
                p[i] = saved - step;
                const double down = loss_only(probe, graph, label);
                p[i] = saved;
                const double numeric = (up - down) / (2.0 * step);
                const double scale = std::max(std::abs(g[i]), std::abs(numeric));
                if (scale < abs_threshold) {
                    ++result.skipped;
                    continue;
                }
                ++result.compared;
                const double rel = std::max(0.0, std::abs(g[i] - numeric) - rounding) / scale;
                if (rel > result.max_relative_error) {
                    result.max_relative_error = rel;
                    result.worst_parameter = name + "[" + std::to_string(i) + "]";
                }
            }
        },
        probe, analytic);
    return result;
}

}  // namespace graphnnk

#endif
