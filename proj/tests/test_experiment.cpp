#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "adasin/experiment.hpp"
#include "tempdir.hpp"

using namespace adasin;

namespace {

ExperimentConfig quick_config(const fs::path& out, std::uint64_t seed = 0) {
    ExperimentConfig cfg;
    cfg.data = {4, 8, 40, 20.0, 0.3, 0};
    cfg.train.epochs = 3;
    cfg.train.batch_size = 32;
    cfg.train.lr_drop_epochs = {2};
    cfg.train.log_interval = 1;
    cfg.train.model = {8, {}};
    cfg.train.loss = LossConfig::defaults(Method::AdaSin);
    cfg.eval.positive_pairs = 50;
    cfg.eval.negative_pairs = 50;
    cfg.eval.far_levels = {0.1};
    cfg.output_dir = out.string();
    cfg.set_seed(seed);
    return cfg;
}

}  // namespace

TEST(Config, RoundTripsThroughKeyValues) {
    ExperimentConfig cfg = standard_benchmark(17, 0.5);
    cfg.train.loss = LossConfig::defaults(Method::SphereFace);
    cfg.train.loss.h = 0.85;
    cfg.train.weight_init = WeightInit::ClassMean;
    cfg.train.lr_drop_epochs = {};
    cfg.eval.far_levels = {0.1, 1e-4};
    cfg.data_dir = "somewhere";
    const ExperimentConfig back = apply_keyvalues(KeyValues::parse(config_text(cfg)));
    EXPECT_EQ(config_text(back), config_text(cfg));
    EXPECT_EQ(back.train.loss.method, Method::SphereFace);
    EXPECT_EQ(back.train.loss.h, 0.85);
    EXPECT_EQ(back.data.seed, 17u);
    EXPECT_TRUE(back.train.lr_drop_epochs.empty());
}

TEST(Config, SeedKeyFeedsEveryConsumer) {
    KeyValues kv;
    kv.set("seed", 9);
    const ExperimentConfig c = apply_keyvalues(kv);
    EXPECT_EQ(c.data.seed, 9u);
    EXPECT_EQ(c.train.seed, 9u);
}

TEST(Config, UnknownKeyIsRejected) {
    KeyValues kv;
    kv.set("loss.margin", 0.5);
    EXPECT_THROW(apply_keyvalues(kv), ConfigError);
    KeyValues bad;
    bad.set("loss.method", std::string("nosuch"));
    EXPECT_THROW(apply_keyvalues(bad), UnknownMethod);
}

TEST(Config, MethodChangeResetsMargin) {
    KeyValues kv;
    kv.set("loss.method", std::string("sphereface"));
    EXPECT_EQ(apply_keyvalues(kv).train.loss.m, LossConfig::defaults(Method::SphereFace).m);
    kv.set("loss.m", 2.0);
    EXPECT_EQ(apply_keyvalues(kv).train.loss.m, 2.0);
}

TEST(TrainLog, CsvRoundTrip) {
    std::vector<TrainLogRecord> log = {{0, 0, 3.5, 0.0, 0.1, 0.7, 0.2, 0.1},
                                       {1, 0, 1.0 / 3.0, 0.123456789012345678, -0.5, 0.25, 0.0, 0.1}};
    EXPECT_EQ(parse_train_log(train_log_csv(log)), log);
    EXPECT_EQ(train_log_csv(log).rfind(kTrainLogHeader, 0), 0u);
}

TEST(Parameters, RoundTrip) {
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.model = {4, {6}};
    const TrainResult r = train(cfg, generate({3, 5, 10, 20.0, 0.0, 1}));
    const TrainResult back = parameters_from_keyvalues(
        KeyValues::parse(parameters_to_keyvalues(r).to_string("adasin-parameters v1")));
    ASSERT_EQ(back.model.layers.size(), 2u);
    for (std::size_t l = 0; l < 2; ++l) {
        EXPECT_EQ(back.model.layers[l].weight, r.model.layers[l].weight);
        EXPECT_EQ(back.model.layers[l].bias, r.model.layers[l].bias);
    }
    EXPECT_EQ(back.weights.weights, r.weights.weights);
    EXPECT_EQ(back.state.t, r.state.t);
    EXPECT_EQ(back.state.k, r.state.k);
}

TEST(Commands, TrainWritesEveryArtifact) {
    TempDir tmp("train");
    const RunOutcome run = cmd_train(quick_config(tmp / "run"));
    for (const char* f : {"config.txt", "train_log.csv", "parameters.txt", "verification.csv",
                          "compactness.csv", "summary.txt"})
        EXPECT_TRUE(fs::exists(tmp / "run" / f)) << f;
    const auto log = parse_train_log(read_file((tmp / "run" / "train_log.csv").string()));
    ASSERT_FALSE(log.empty());
    EXPECT_EQ(log.front().t, 0.0);
    EXPECT_EQ(log, run.result.log);
    const KeyValues summary = KeyValues::parse(read_file((tmp / "run" / "summary.txt").string()));
    EXPECT_EQ(summary.get("method"), "adasin");
    EXPECT_EQ(summary.real("lowest_far_level"), 1.0 / 50.0);
}

TEST(Commands, RerunFromStoredConfigIsIdentical) {
    TempDir tmp("rerun");
    cmd_train(quick_config(tmp / "first", 4));
    ExperimentConfig again = read_config(tmp / "first" / "config.txt");
    again.output_dir = (tmp / "second").string();
    cmd_train(again);
    EXPECT_EQ(read_file((tmp / "first" / "train_log.csv").string()),
              read_file((tmp / "second" / "train_log.csv").string()));
    EXPECT_EQ(read_file((tmp / "first" / "parameters.txt").string()),
              read_file((tmp / "second" / "parameters.txt").string()));
}

TEST(Commands, AllEasyDataMakesAdaSinTrainLikeArcFace) {
    TempDir tmp("easy");
    ExperimentConfig cfg = quick_config(tmp / "arc");
    cfg.data.concentration = std::numeric_limits<double>::infinity();
    cfg.data.hard_fraction = 0.0;
    cfg.train.weight_init = WeightInit::ClassMean;
    cfg.train.loss = LossConfig::defaults(Method::ArcFace);
    std::size_t hard_seen = 0;
    const RunOutcome arc = run_experiment(cfg);
    cfg.train.loss = loss_for(Method::AdaSin, cfg.train.loss);
    const RunOutcome ada = run_experiment(cfg, [&](const IterationStats& st) { hard_seen += st.hard_pairs; });
    ASSERT_EQ(hard_seen, 0u);
    ASSERT_EQ(arc.result.log.size(), ada.result.log.size());
    for (std::size_t k = 0; k < arc.result.log.size(); ++k)
        EXPECT_NEAR(arc.result.log[k].loss, ada.result.log[k].loss, 1e-10) << "record " << k;
}

TEST(Commands, ModulationScaleIsRecorded) {
    TempDir tmp("h");
    for (double h : {1.0, 0.85}) {
        ExperimentConfig cfg = quick_config(tmp / std::to_string(h));
        cfg.train.loss.h = h;
        const RunOutcome run = cmd_train(cfg);
        EXPECT_GT(run.summary.iterations, 0u);
        EXPECT_EQ(read_config(fs::path(cfg.output_dir) / "config.txt").train.loss.h, h);
    }
}

TEST(Commands, CompareNeedsTwoDistinctMethods) {
    TempDir tmp("cmp1");
    const ExperimentConfig cfg = quick_config(tmp.path());
    EXPECT_THROW(cmd_compare(cfg, {Method::AdaSin}), ConfigError);
    EXPECT_THROW(cmd_compare(cfg, {Method::AdaSin, Method::AdaSin}), ConfigError);
}

TEST(Commands, CompareReportsDirectionAgainstBaseline) {
    TempDir tmp("cmp");
    ExperimentConfig cfg = quick_config(tmp.path());
    cfg.data.hard_fraction = 0.5;
    const Comparison c = cmd_compare(cfg, {Method::ArcFace, Method::AdaSin});
    ASSERT_EQ(c.runs.size(), 2u);
    EXPECT_EQ(c.summary.get("baseline"), "arcface");
    const std::string dir = c.summary.get("delta_direction.adasin");
    EXPECT_TRUE(dir == "lower" || dir == "higher" || dir == "equal");
    EXPECT_EQ(c.summary.real("delta_mean_difficulty.adasin"),
              c.runs[1].final_mean_difficulty - c.runs[0].final_mean_difficulty);
    EXPECT_TRUE(fs::exists(tmp / "comparison.csv"));
    EXPECT_TRUE(fs::exists(tmp / "arcface" / "train_log.csv"));
    EXPECT_TRUE(fs::exists(tmp / "adasin" / "train_log.csv"));
    const std::string csv = read_file((tmp / "comparison.csv").string());
    EXPECT_NE(csv.find("tar_at_far_0.1"), std::string::npos);
}

TEST(Commands, EvalReproducesTheRunSummary) {
    TempDir tmp("eval");
    const RunOutcome run = cmd_train(quick_config(tmp / "run"));
    const EvalOutcome again = cmd_eval(tmp / "run", "", {});
    EXPECT_EQ(again.verification.accuracy_at_best_threshold, run.summary.verification.accuracy_at_best_threshold);
    EXPECT_NEAR(again.mean_difficulty, run.summary.holdout_mean_difficulty, 1e-15);

    cmd_gen({4, 8, 20, 20.0, 0.3, 2}, 30, 30, tmp / "data");
    const EvalOutcome external = cmd_eval(tmp / "run", (tmp / "data").string(), {0.1});
    EXPECT_EQ(external.verification.n_pos, 30u);
    ASSERT_EQ(external.verification.tar_at_far.size(), 1u);

    cmd_gen({5, 8, 20, 20.0, 0.3, 2}, 30, 30, tmp / "wide");
    EXPECT_THROW(cmd_eval(tmp / "run", (tmp / "wide").string(), {}), ShapeMismatch);
}
