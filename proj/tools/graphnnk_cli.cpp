// graphnnk command line: train / eval / explain / info, plus synth for a toy dataset.
// Exit codes: 0 success, 2 input or configuration error, 3 runtime or numeric error.

#include <graphnnk/graphnnk.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

struct Overrides {
    std::optional<std::string> dataset, out, pooling, epsilon, features, metric, kernel, split, checkpoint;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs, layers, hidden, mlp_depth, batch, k, nnk_every;
    std::optional<double> dropout, lr, tau_edge, tolerance, bandwidth, jitter, fixed_epsilon;

    void attach(CLI::App& app, bool with_checkpoint) {
        app.add_option("--dataset", dataset, "TU dataset directory");
        app.add_option("--out", out, "output directory");
        app.add_option("--seed", seed, "seed for splitting and training");
        app.add_option("--epochs", epochs);
        app.add_option("--layers", layers, "number of GIN layers");
        app.add_option("--hidden", hidden, "hidden dimension");
        app.add_option("--mlp-depth", mlp_depth, "dense layers per GIN MLP");
        app.add_option("--dropout", dropout);
        app.add_option("--lr", lr, "Adam learning rate");
        app.add_option("--batch", batch, "mini-batch size");
        app.add_option("--pooling", pooling, "sum | mean");
        app.add_option("--epsilon", epsilon, "learnable | fixed");
        app.add_option("--fixed-epsilon", fixed_epsilon, "epsilon value when --epsilon fixed");
        app.add_option("--features", features, "one_hot | scalar degree features");
        app.add_option("--split", split, "train,val,test ratios, e.g. 0.8,0.1,0.1");
        app.add_option("--k", k, "neighbors retrieved per query");
        app.add_option("--tau-edge", tau_edge, "coefficient sparsity threshold");
        app.add_option("--tolerance", tolerance, "NNK solver KKT tolerance");
        app.add_option("--metric", metric, "euclidean | cosine");
        app.add_option("--kernel", kernel, "cosine_shifted | rbf");
        app.add_option("--bandwidth", bandwidth, "rbf bandwidth");
        app.add_option("--jitter", jitter, "Gram diagonal jitter");
        app.add_option("--nnk-every", nnk_every, "also log NNK accuracy every N epochs during training");
        if (with_checkpoint) app.add_option("--checkpoint", checkpoint, "best | last | both");
    }

    void apply(graphnnk::RunConfig& c) const {
        using nlohmann::json;
        auto enum_from = [](const std::string& s, auto& target) {
            json j = s;
            target = j.get<std::remove_reference_t<decltype(target)>>();
            if (json(target).get<std::string>() != s) throw graphnnk::InvalidInput("unknown value '" + s + "'");
        };
        if (dataset) c.dataset_path = *dataset;
        if (out) c.output_dir = *out;
        if (seed) c.seed = *seed;
        if (epochs) c.gin.epochs = *epochs;
        if (layers) c.gin.num_layers = *layers;
        if (hidden) c.gin.hidden_dim = *hidden;
        if (mlp_depth) c.gin.mlp_depth = *mlp_depth;
        if (dropout) c.gin.dropout = *dropout;
        if (lr) c.gin.learning_rate = *lr;
        if (batch) c.gin.batch_size = *batch;
        if (pooling) enum_from(*pooling, c.gin.pooling);
        if (epsilon) enum_from(*epsilon, c.gin.epsilon_mode);
        if (fixed_epsilon) c.gin.fixed_epsilon = *fixed_epsilon;
        if (features) c.features = graphnnk::degree_mode_from_string(*features);
        if (split) {
            std::stringstream ss(*split);
            std::string part;
            std::vector<double> r;
            while (std::getline(ss, part, ',')) r.push_back(std::stod(part));
            if (r.size() != 3) throw graphnnk::InvalidInput("--split needs three comma-separated ratios");
            c.split = {r[0], r[1], r[2]};
        }
        if (k) c.k_neighbors = *k;
        if (tau_edge) c.tau_edge = *tau_edge;
        if (tolerance) c.solver_tolerance = *tolerance;
        if (metric) enum_from(*metric, c.metric);
        if (kernel) enum_from(*kernel, c.kernel.kind);
        if (bandwidth) c.kernel.bandwidth = *bandwidth;
        if (jitter) c.kernel.jitter = *jitter;
        if (nnk_every) c.nnk_every = *nnk_every;
        if (checkpoint) enum_from(*checkpoint, c.checkpoint);
    }
};

void print_table(const std::vector<graphnnk::EvalResult>& results) {
    std::printf("%-10s %-12s %9s %9s %9s\n", "checkpoint", "classifier", "accuracy", "macro_f1", "mean_k");
    for (const auto& r : results) {
        std::printf("%-10s %-12s %9.4f %9.4f %9s\n", graphnnk::to_string(r.which), "supervised", r.supervised.accuracy,
                    r.supervised.macro_f1, "-");
        std::printf("%-10s %-12s %9.4f %9.4f %9.2f\n", graphnnk::to_string(r.which), "nnk", r.nnk.accuracy,
                    r.nnk.macro_f1, r.mean_active);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GIN graph classification with a non-negative kernel regression classifier"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration (flags override it)");

    Overrides ov;
    auto* train = app.add_subcommand("train", "train the encoder and write best/last checkpoints");
    ov.attach(*train, false);
    auto* eval = app.add_subcommand("eval", "evaluate supervised head and NNK at a checkpoint");
    ov.attach(*eval, true);
    auto* explain = app.add_subcommand("explain", "write the NNK explanation for one test graph");
    ov.attach(*explain, true);
    std::size_t explain_id = 0;
    explain->add_option("--id", explain_id, "graph id (0-based, test split)")->required();
    auto* info = app.add_subcommand("info", "print dataset statistics as JSON");
    ov.attach(*info, false);
    auto* synth = app.add_subcommand("synth", "write a cycles-vs-stars dataset in TU format");
    std::string synth_dir, synth_prefix = "SYNTH";
    std::size_t per_class = 100;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_dir, "output directory")->required();
    synth->add_option("--prefix", synth_prefix);
    synth->add_option("--per-class", per_class);
    synth->add_option("--seed", synth_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            auto ds = graphnnk::make_cycles_vs_stars(per_class, synth_seed);
            graphnnk::write_tu_dataset(ds, synth_dir, synth_prefix);
            std::cout << "wrote " << ds.size() << " graphs to " << synth_dir << "\n";
            return 0;
        }

        graphnnk::RunConfig config;
        if (!config_path.empty()) config = graphnnk::load_run_config(config_path);
        ov.apply(config);
        if (!config.dataset_path.empty() && !std::filesystem::exists(config.dataset_path))
            throw graphnnk::LoadError("dataset path does not exist: " + config.dataset_path);

        if (train->parsed()) {
            if (!ov.seed) throw graphnnk::InvalidInput("train requires --seed");
            const auto result = graphnnk::cmd_train(config);
            const auto& s = result.state;
            std::printf("trained %zu epochs; best val accuracy %.4f at epoch %zu; last val accuracy %.4f\n", s.epoch,
                        s.best_val_metric, s.best_epoch, s.curve.empty() ? 0.0 : s.curve.back().val_accuracy);
        } else if (eval->parsed()) {
            const auto results = graphnnk::cmd_eval(config);
            print_table(results);
        } else if (explain->parsed()) {
            const auto which = config.checkpoint == graphnnk::CheckpointSelector::last ? graphnnk::CheckpointKind::last
                                                                                       : graphnnk::CheckpointKind::best;
            const auto ex = graphnnk::cmd_explain(config, explain_id, which);
            std::cout << graphnnk::to_json(ex).dump(2) << "\n";
        } else if (info->parsed()) {
            std::cout << graphnnk::cmd_info(config).dump(2) << "\n";
        }
    } catch (const graphnnk::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
