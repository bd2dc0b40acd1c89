#ifndef GRAPHNNK_PIPELINE_HPP
#define GRAPHNNK_PIPELINE_HPP

// End-to-end orchestration: train the encoder, export embeddings, classify the
// test split with both the softmax head and NNK, and write reports.
//
// Output directory layout:
//   config.json
//   checkpoints/{best,last}.json
//   embeddings/{best,last}.jsonl
//   reports/training_curve.csv, reports/eval_{best,last}.json, reports/timings_{best,last}.json
//   explanations/{best,last}.jsonl, explanations/graph_<id>_<which>.json

#include "errors.hpp"
#include "gin.hpp"
#include "graph.hpp"
#include "knn.hpp"
#include "metrics.hpp"
#include "nnk.hpp"
#include "serialization.hpp"
#include "trainer.hpp"
#include "tu_format.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphnnk {

enum class CheckpointSelector { best, last, both };

NLOHMANN_JSON_SERIALIZE_ENUM(CheckpointSelector,
                             {{CheckpointSelector::best, "best"}, {CheckpointSelector::last, "last"},
                              {CheckpointSelector::both, "both"}})
NLOHMANN_JSON_SERIALIZE_ENUM(DegreeFeatureMode,
                             {{DegreeFeatureMode::one_hot, "one_hot"}, {DegreeFeatureMode::scalar, "scalar"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SplitRatios, train, val, test)

struct RunConfig {
    std::string dataset_path;
    std::string output_dir = "run";
    std::uint64_t seed = 0;   // split shuffling and encoder training
    GinConfig gin;
    DegreeFeatureMode features = DegreeFeatureMode::one_hot;
    SplitRatios split;
    KernelSpec kernel;
    std::size_t k_neighbors = 50;
    double tau_edge = 1e-10;
    double solver_tolerance = 1e-9;
    Metric metric = Metric::euclidean;
    CheckpointSelector checkpoint = CheckpointSelector::best;
    std::size_t nnk_every = 0;   // 0 = NNK only at the saved checkpoints

    void validate() const {
        gin.validate();
        kernel.validate();
        if (k_neighbors < 1) throw InvalidInput("k_neighbors must be >= 1");
        if (!(tau_edge >= 0.0)) throw InvalidInput("tau_edge must be non-negative");
        if (!(solver_tolerance > 0.0)) throw InvalidInput("solver_tolerance must be positive");
    }

    SolverSettings solver() const { return {solver_tolerance, tau_edge}; }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, dataset_path, output_dir, seed, gin, features, split, kernel,
                                                k_neighbors, tau_edge, solver_tolerance, metric, checkpoint, nnk_every)

inline RunConfig load_run_config(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path)).get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

struct OutputPaths {
    std::filesystem::path root;

    std::filesystem::path config() const { return root / "config.json"; }
    std::filesystem::path checkpoint(CheckpointKind k) const { return root / "checkpoints" / (std::string(to_string(k)) + ".json"); }
    std::filesystem::path embeddings(CheckpointKind k) const { return root / "embeddings" / (std::string(to_string(k)) + ".jsonl"); }
    std::filesystem::path curve() const { return root / "reports" / "training_curve.csv"; }
    std::filesystem::path report(CheckpointKind k) const { return root / "reports" / ("eval_" + std::string(to_string(k)) + ".json"); }
    std::filesystem::path timings(CheckpointKind k) const { return root / "reports" / ("timings_" + std::string(to_string(k)) + ".json"); }
    std::filesystem::path explanations(CheckpointKind k) const { return root / "explanations" / (std::string(to_string(k)) + ".jsonl"); }
    std::filesystem::path explanation(std::size_t id, CheckpointKind k) const {
        return root / "explanations" / ("graph_" + std::to_string(id) + "_" + to_string(k) + ".json");
    }
};

inline std::vector<CheckpointKind> selected(CheckpointSelector s) {
    if (s == CheckpointSelector::both) return {CheckpointKind::best, CheckpointKind::last};
    return {s == CheckpointSelector::best ? CheckpointKind::best : CheckpointKind::last};
}

/// Parse, featurize and split according to the run config.
inline GraphDataset prepare_dataset(const RunConfig& config) {
    if (config.dataset_path.empty()) throw InvalidInput("no dataset path given");
    auto ds = parse_tu_dataset(config.dataset_path);
    ds = assign_degree_features(std::move(ds), config.features);
    return stratified_split(std::move(ds), config.split, config.seed);
}

inline GinConfig effective_gin(const RunConfig& config) {
    GinConfig g = config.gin;
    g.seed = config.seed;
    return g;
}

struct NnkRun {
    std::vector<std::size_t> predictions;
    std::vector<Explanation> explanations;
    double mean_active = 0.0;
    std::size_t fallbacks = 0;
    double max_kkt_residual = 0.0;
    KriStats kri;
};

/// NNK classification of the given embedding rows against an index of the train rows.
inline NnkRun classify_nnk(const EmbeddingSet& emb, const std::vector<std::size_t>& rows, const RunConfig& config,
                           std::size_t num_classes) {
    const auto index = build_index(emb, config.metric);
    NnkRun run;
    std::size_t active_total = 0;
    for (auto r : rows) {
        auto x = emb.vectors.row(r);
        const auto neighbors = query(index, x, config.k_neighbors);
        const auto problem = build_problem(config.kernel, x, neighbors, index);
        const auto solution = solve_nnqp(problem, config.solver());
        auto ex = explain(emb.graph_ids[r], solution, problem, num_classes);
        if (ex.fallback) ++run.fallbacks;
        const auto kri = kri_diagnostics(problem, solution);
        run.kri.pairs += kri.pairs;
        run.kri.satisfied += kri.satisfied;
        run.max_kkt_residual = std::max(run.max_kkt_residual, solution.kkt_residual);
        active_total += solution.active_count();
        run.predictions.push_back(ex.predicted);
        run.explanations.push_back(std::move(ex));
    }
    run.mean_active = rows.empty() ? 0.0 : static_cast<double>(active_total) / static_cast<double>(rows.size());
    return run;
}

inline std::vector<std::size_t> rows_with_split(const EmbeddingSet& emb, Split s) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < emb.size(); ++i)
        if (emb.split[i] == s) rows.push_back(i);
    return rows;
}

inline std::vector<std::size_t> labels_of(const EmbeddingSet& emb, const std::vector<std::size_t>& rows) {
    std::vector<std::size_t> out;
    for (auto r : rows) out.push_back(static_cast<std::size_t>(emb.labels[r]));
    return out;
}

struct CurveExtra {
    std::size_t epoch = 0;
    double nnk_val_accuracy = 0.0;
    double nnk_test_accuracy = 0.0;
};

struct TrainResult {
    TrainState state;
    std::vector<CurveExtra> nnk_curve;
};

inline std::string format_curve(const std::vector<EpochRecord>& curve, const std::vector<CurveExtra>& nnk) {
    std::string out = nnk.empty() ? "epoch,train_loss,val_accuracy\n"
                                  : "epoch,train_loss,val_accuracy,nnk_val_accuracy,nnk_test_accuracy\n";
    char buf[160];
    for (const auto& r : curve) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g", r.epoch, r.train_loss, r.val_accuracy);
        out += buf;
        if (!nnk.empty()) {
            auto it = std::find_if(nnk.begin(), nnk.end(), [&](const CurveExtra& c) { return c.epoch == r.epoch; });
            if (it != nnk.end()) {
                std::snprintf(buf, sizeof buf, ",%.17g,%.17g", it->nnk_val_accuracy, it->nnk_test_accuracy);
                out += buf;
            } else {
                out += ",,";
            }
        }
        out += '\n';
    }
    return out;
}

/// Stage one: parse, featurize, split, train; writes config echo, both checkpoints and the curve log.
inline TrainResult cmd_train(const RunConfig& config) {
    config.validate();
    const auto dataset = prepare_dataset(config);
    const OutputPaths out{config.output_dir};
    write_text_file(out.config(), nlohmann::json(config).dump(2) + "\n");

    TrainResult result;
    const auto gin = effective_gin(config);
    const auto num_classes = static_cast<std::size_t>(dataset.num_classes);
    EpochCallback hook;
    if (config.nnk_every > 0) {
        hook = [&](const TrainState& s) {
            if (s.epoch % config.nnk_every != 0) return;
            const auto emb = export_embeddings(s.model, dataset);
            CurveExtra extra{s.epoch, 0.0, 0.0};
            for (Split which : {Split::val, Split::test}) {
                const auto rows = rows_with_split(emb, which);
                if (rows.empty()) continue;
                const auto run = classify_nnk(emb, rows, config, num_classes);
                const double acc = compute_metrics(run.predictions, labels_of(emb, rows), num_classes).accuracy;
                (which == Split::val ? extra.nnk_val_accuracy : extra.nnk_test_accuracy) = acc;
            }
            result.nnk_curve.push_back(extra);
        };
    }
    result.state = train(dataset, gin, hook);

    const auto& st = result.state;
    save_checkpoint(out.checkpoint(CheckpointKind::last), st.model,
                    {st.epoch, st.curve.empty() ? 0.0 : st.curve.back().val_accuracy});
    if (st.best_checkpoint) {
        save_checkpoint(out.checkpoint(CheckpointKind::best), *st.best_checkpoint, {st.best_epoch, st.best_val_metric});
    } else {
        std::filesystem::remove(out.checkpoint(CheckpointKind::best));
    }
    write_text_file(out.curve(), format_curve(st.curve, result.nnk_curve));
    return result;
}

struct EvalResult {
    CheckpointKind which = CheckpointKind::best;
    ClassificationMetrics supervised;
    ClassificationMetrics nnk;
    double mean_active = 0.0;
    nlohmann::json report;
    nlohmann::json timings;
};

/// Stage two at one checkpoint: both classifiers on the identical test split.
inline EvalResult evaluate_checkpoint(const RunConfig& config, const GraphDataset& dataset, CheckpointKind which) {
    using clock = std::chrono::steady_clock;
    const OutputPaths out{config.output_dir};
    CheckpointInfo info;
    const auto t0 = clock::now();
    const GinModel model = load_checkpoint(out.checkpoint(which), &info);

    const std::string emb_text = embeddings_to_jsonl(export_embeddings(model, dataset));
    write_text_file(out.embeddings(which), emb_text);
    const auto checksum = fnv1a_hex(emb_text);
    // both classifiers read the serialized embeddings
    const EmbeddingSet emb = embeddings_from_jsonl(emb_text);
    const auto t1 = clock::now();

    const auto num_classes = static_cast<std::size_t>(dataset.num_classes);
    const auto test_rows = rows_with_split(emb, Split::test);
    if (test_rows.empty()) throw InvalidInput("evaluation: empty test split");
    const auto truth = labels_of(emb, test_rows);

    std::vector<std::size_t> sup_pred;
    for (auto r : test_rows) sup_pred.push_back(argmax(softmax_head(model, emb.vectors.row(r))));
    const auto t2 = clock::now();

    const auto nnk = classify_nnk(emb, test_rows, config, num_classes);
    const auto t3 = clock::now();

    EvalResult res;
    res.which = which;
    res.supervised = compute_metrics(sup_pred, truth, num_classes);
    res.nnk = compute_metrics(nnk.predictions, truth, num_classes);
    res.mean_active = nnk.mean_active;

    std::string explanations;
    for (const auto& ex : nnk.explanations) explanations += to_json(ex).dump() + "\n";
    write_text_file(out.explanations(which), explanations);

    nlohmann::json nnk_json = to_json(res.nnk);
    nnk_json["mean_active_neighbors"] = nnk.mean_active;
    nnk_json["k_neighbors"] = config.k_neighbors;
    nnk_json["fallback_count"] = nnk.fallbacks;
    nnk_json["max_kkt_residual"] = nnk.max_kkt_residual;
    nnk_json["kri_pairs"] = nnk.kri.pairs;
    nnk_json["kri_pairs_satisfied"] = nnk.kri.satisfied;
    res.report = {{"config", config},
                  {"checkpoint", to_string(which)},
                  {"checkpoint_epoch", info.epoch},
                  {"checkpoint_val_accuracy", info.val_metric},
                  {"embeddings_checksum_fnv1a64", checksum},
                  {"supervised_embeddings_checksum_fnv1a64", checksum},
                  {"nnk_embeddings_checksum_fnv1a64", checksum},
                  {"test_count", test_rows.size()},
                  {"supervised", to_json(res.supervised)},
                  {"nnk", nnk_json},
                  {"accuracy_gap_nnk_minus_supervised", res.nnk.accuracy - res.supervised.accuracy}};
    auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    res.timings = {{"export_seconds", secs(t0, t1)}, {"supervised_seconds", secs(t1, t2)}, {"nnk_seconds", secs(t2, t3)}};
    write_text_file(out.report(which), res.report.dump(2) + "\n");
    write_text_file(out.timings(which), res.timings.dump(2) + "\n");
    return res;
}

inline std::vector<EvalResult> cmd_eval(const RunConfig& config) {
    config.validate();
    const auto dataset = prepare_dataset(config);
    std::vector<EvalResult> results;
    for (auto which : selected(config.checkpoint)) results.push_back(evaluate_checkpoint(config, dataset, which));
    return results;
}

/// Recomputes the NNK explanation of one test graph from the exported embeddings.
inline Explanation cmd_explain(const RunConfig& config, std::size_t graph_id, CheckpointKind which) {
    config.validate();
    const OutputPaths out{config.output_dir};
    const auto path = out.embeddings(which);
    if (!std::filesystem::exists(path)) throw StateError("no exported embeddings at " + path.string() + "; run eval first");
    const auto emb = embeddings_from_jsonl(read_text_file(path));
    std::size_t row = emb.size();
    for (std::size_t i = 0; i < emb.size(); ++i)
        if (emb.graph_ids[i] == graph_id) row = i;
    if (row == emb.size()) throw LookupError("graph " + std::to_string(graph_id) + " not found");
    if (emb.split[row] != Split::test)
        throw LookupError("graph " + std::to_string(graph_id) + " is in the " + to_string(emb.split[row]) +
                          " split, not test");
    int max_label = 0;
    for (int l : emb.labels) max_label = std::max(max_label, l);
    const auto run = classify_nnk(emb, {row}, config, static_cast<std::size_t>(max_label) + 1);
    const auto& ex = run.explanations.front();
    write_text_file(out.explanation(graph_id, which), to_json(ex).dump(2) + "\n");
    return ex;
}

inline nlohmann::json cmd_info(const RunConfig& config) {
    const auto ds = prepare_dataset(config);
    auto j = dataset_summary(ds);
    j["feature_mode"] = to_string(config.features);
    j["split_seed"] = config.seed;
    j["warnings"] = ds.warnings;
    return j;
}

}  // namespace graphnnk

#endif
