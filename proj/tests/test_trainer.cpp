#include <graphnnk/serialization.hpp>
#include <graphnnk/synthetic.hpp>
#include <graphnnk/trainer.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace graphnnk;

namespace {

GraphDataset synthetic(std::uint64_t seed) {
    auto ds = make_cycles_vs_stars(100, seed);
    ds = assign_degree_features(std::move(ds), DegreeFeatureMode::one_hot);
    return stratified_split(std::move(ds), {0.8, 0.1, 0.1}, seed);
}

GinConfig small_config(std::uint64_t seed, std::size_t epochs) {
    GinConfig c;
    c.hidden_dim = 32;
    c.epochs = epochs;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(Train, ZeroEpochsKeepsInitialModel) {
    const auto ds = synthetic(0);
    const auto c = small_config(3, 0);
    const auto st = train(ds, c);
    std::mt19937_64 rng(3);
    EXPECT_EQ(st.model, initialize_model(c, ds.feature_dim, 2, rng));
    EXPECT_FALSE(st.best_checkpoint.has_value());
    EXPECT_THROW(export_embeddings(st, ds, CheckpointKind::best), StateError);
    EXPECT_NO_THROW(export_embeddings(st, ds, CheckpointKind::last));
}

TEST(Train, SameSeedSameTrajectory) {
    const auto ds = synthetic(1);
    const auto a = train(ds, small_config(5, 4));
    const auto b = train(ds, small_config(5, 4));
    EXPECT_EQ(a.curve, b.curve);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(*a.best_checkpoint, *b.best_checkpoint);
}

TEST(Train, SeparableSetReachesHighValidationAccuracy) {
    for (std::uint64_t seed : {0, 1, 2}) {
        const auto ds = synthetic(seed);
        const auto st = train(ds, small_config(seed, 30));
        EXPECT_GE(st.best_val_metric, 0.95) << "seed " << seed;
        double first = 0, last = 0;
        for (int i = 0; i < 5; ++i) {
            first += st.curve[i].train_loss;
            last += st.curve[st.curve.size() - 1 - i].train_loss;
        }
        EXPECT_LT(last, first) << "seed " << seed;
    }
}

TEST(Train, BestCheckpointTracksStrictImprovement) {
    const auto ds = synthetic(2);
    const auto st = train(ds, small_config(2, 10));
    double best = -1.0;
    std::size_t best_epoch = 0;
    for (const auto& r : st.curve)
        if (r.val_accuracy > best) {
            best = r.val_accuracy;
            best_epoch = r.epoch;
        }
    EXPECT_EQ(st.best_val_metric, best);
    EXPECT_EQ(st.best_epoch, best_epoch);
    EXPECT_DOUBLE_EQ(accuracy_on(*st.best_checkpoint, ds, ds.indices_of(Split::val)), best);
}

TEST(Train, RequiresTrainAndValidationSplits) {
    auto ds = make_cycles_vs_stars(10, 0);
    ds = assign_degree_features(ds, DegreeFeatureMode::one_hot);
    EXPECT_THROW(train(ds, small_config(0, 1)), InvalidInput);
    ds.split.assign(ds.size(), Split::train);
    EXPECT_THROW(train(ds, small_config(0, 1)), InvalidInput);
}

TEST(ExportEmbeddings, ShapeDeterminismAndCheckpointContrast) {
    const auto ds = synthetic(0);
    const auto st = train(ds, small_config(0, 30));
    const auto a = export_embeddings(st, ds, CheckpointKind::best);
    const auto b = export_embeddings(st, ds, CheckpointKind::best);
    EXPECT_EQ(a.size(), ds.size());
    EXPECT_EQ(a.dim(), 32u);
    EXPECT_EQ(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.graph_ids[i], i);
    ASSERT_LT(st.best_epoch, st.epoch);   // training kept moving after the best epoch
    EXPECT_NE(a.vectors, export_embeddings(st, ds, CheckpointKind::last).vectors);
}

TEST(Serialization, CheckpointAndEmbeddingsRoundTripExactly) {
    const auto ds = synthetic(4);
    const auto st = train(ds, small_config(4, 2));
    const auto j = checkpoint_to_json(st.model, {2, 0.5});
    CheckpointInfo info;
    const auto back = checkpoint_from_json(nlohmann::json::parse(j.dump()), &info);
    EXPECT_EQ(back, st.model);
    EXPECT_EQ(info.epoch, 2u);

    const auto emb = export_embeddings(st, ds, CheckpointKind::last);
    const auto text = embeddings_to_jsonl(emb);
    const auto parsed = embeddings_from_jsonl(text);
    EXPECT_EQ(parsed, emb);
    EXPECT_EQ(embeddings_to_jsonl(parsed), text);
}

TEST(Serialization, RejectsForeignOrCorruptCheckpoints) {
    EXPECT_THROW(checkpoint_from_json({{"format", "other"}}), FormatError);
    const auto ds = synthetic(4);
    const auto st = train(ds, small_config(4, 0));
    auto j = checkpoint_to_json(st.model, {});
    j["parameters"][0]["data"].erase(0);
    EXPECT_THROW(checkpoint_from_json(j), FormatError);
    EXPECT_THROW(load_checkpoint("/nonexistent/best.json"), StateError);
}
