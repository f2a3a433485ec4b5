#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <future>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adasin/data.hpp"
#include "adasin/errors.hpp"
#include "adasin/eval.hpp"
#include "adasin/kvfile.hpp"
#include "adasin/losses.hpp"
#include "adasin/trainer.hpp"

namespace adasin {

struct EvalConfig {
    std::vector<double> far_levels = {1e-2, 1e-3};
    std::size_t positive_pairs = 1000;
    std::size_t negative_pairs = 1000;
    double holdout = 0.2;  // per-class share of samples kept out of training

    void validate() const {
        ensure<ConfigError>(holdout > 0.0 && holdout < 1.0, "eval.holdout must lie in (0, 1)");
        ensure<ConfigError>(positive_pairs >= 1 && negative_pairs >= 1,
                            "eval needs at least one positive and one negative pair");
        for (double f : far_levels)
            ensure<ConfigError>(f > 0.0 && f <= 1.0, "FAR levels must lie in (0, 1]");
    }
};

/// Everything needed to reproduce one run. The top-level seed is copied
/// into the data and training seeds; each consumer derives its own streams.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    SyntheticSpec data;
    std::string data_dir;  // read this dataset instead of generating one
    TrainConfig train;
    EvalConfig eval;
    std::string output_dir = "run";

    void set_seed(std::uint64_t s) {
        seed = s;
        data.seed = s;
        train.seed = s;
    }

    void validate() const {
        if (data_dir.empty()) data.validate();
        train.validate();
        eval.validate();
    }
};

/// 10 classes in 16 dimensions, 200 samples each, 20 epochs.
inline ExperimentConfig standard_benchmark(std::uint64_t seed, double hard_fraction = 0.3) {
    ExperimentConfig cfg;
    cfg.data = SyntheticSpec{10, 16, 200, 20.0, hard_fraction, seed};
    cfg.train.epochs = 20;
    cfg.train.batch_size = 64;
    cfg.train.lr = 0.1;
    cfg.train.lr_drop_epochs = {10, 15, 18};
    cfg.train.lr_drop_factor = 0.1;
    cfg.train.log_interval = 1;
    cfg.train.loss = LossConfig::defaults(Method::AdaSin);
    cfg.set_seed(seed);
    return cfg;
}

// ---------------------------------------------------------------------------
// Flat key=value form

inline const char* weight_init_name(WeightInit w) {
    return w == WeightInit::ClassMean ? "class-mean" : "isotropic";
}

inline WeightInit parse_weight_init(const std::string& name) {
    if (name == "isotropic") return WeightInit::Isotropic;
    if (name == "class-mean") return WeightInit::ClassMean;
    throw ConfigError("unknown weight init '" + name + "'");
}

template <class T>
std::string join_list(const std::vector<T>& values) {
    std::string out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) out += ",";
        if constexpr (std::is_floating_point_v<T>)
            out += format_real(values[k]);
        else
            out += std::to_string(values[k]);
    }
    return out;
}

inline std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    if (trim(text).empty()) return out;
    for (const auto& part : split(text, ','))
        out.push_back(static_cast<int>(parse_integer(trim(part), what)));
    return out;
}

inline KeyValues to_keyvalues(const ExperimentConfig& c) {
    KeyValues kv;
    kv.set("seed", static_cast<unsigned long long>(c.seed));
    kv.set("output_dir", c.output_dir);
    kv.set("data.dir", c.data_dir);
    kv.set("data.n_classes", c.data.n_classes);
    kv.set("data.dim", c.data.dim);
    kv.set("data.samples_per_class", c.data.samples_per_class);
    kv.set("data.concentration", c.data.concentration);
    kv.set("data.hard_fraction", c.data.hard_fraction);
    kv.set("data.seed", static_cast<unsigned long long>(c.data.seed));
    kv.set("train.epochs", c.train.epochs);
    kv.set("train.batch_size", c.train.batch_size);
    kv.set("train.lr", c.train.lr);
    kv.set("train.lr_drops", join_list(c.train.lr_drop_epochs));
    kv.set("train.lr_drop_factor", c.train.lr_drop_factor);
    kv.set("train.momentum", c.train.momentum);
    kv.set("train.weight_decay", c.train.weight_decay);
    kv.set("train.seed", static_cast<unsigned long long>(c.train.seed));
    kv.set("train.log_interval", c.train.log_interval);
    kv.set("train.weight_init", std::string(weight_init_name(c.train.weight_init)));
    kv.set("model.embedding_dim", c.train.model.embedding_dim);
    kv.set("model.hidden", join_list(c.train.model.hidden));
    kv.set("loss.method", std::string(method_name(c.train.loss.method)));
    kv.set("loss.s", c.train.loss.s);
    kv.set("loss.m", c.train.loss.m);
    kv.set("loss.h", c.train.loss.h);
    kv.set("loss.alpha", c.train.loss.alpha);
    kv.set("loss.t_fixed", c.train.loss.t_fixed);
    kv.set("eval.far_levels", join_list(c.eval.far_levels));
    kv.set("eval.positive_pairs", static_cast<unsigned long long>(c.eval.positive_pairs));
    kv.set("eval.negative_pairs", static_cast<unsigned long long>(c.eval.negative_pairs));
    kv.set("eval.holdout", c.eval.holdout);
    return kv;
}

/// Applies the keys present in `kv` on top of `base`. Unknown keys are
/// rejected so a misspelt key cannot silently fall back to a default.
inline ExperimentConfig apply_keyvalues(const KeyValues& kv, ExperimentConfig base = {}) {
    static const std::set<std::string> known = [] {
        std::set<std::string> keys;
        const KeyValues defaults = to_keyvalues(ExperimentConfig{});
        for (const auto& [k, v] : defaults.entries()) keys.insert(k);
        return keys;
    }();
    for (const auto& [k, v] : kv.entries())
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");

    ExperimentConfig c = base;
    auto u64 = [&](const std::string& k) { return static_cast<std::uint64_t>(kv.integer(k)); };
    auto i32 = [&](const std::string& k) { return static_cast<int>(kv.integer(k)); };
    if (kv.has("seed")) c.set_seed(u64("seed"));
    if (kv.has("output_dir")) c.output_dir = kv.get("output_dir");
    if (kv.has("data.dir")) c.data_dir = kv.get("data.dir");
    if (kv.has("data.n_classes")) c.data.n_classes = i32("data.n_classes");
    if (kv.has("data.dim")) c.data.dim = i32("data.dim");
    if (kv.has("data.samples_per_class")) c.data.samples_per_class = i32("data.samples_per_class");
    if (kv.has("data.concentration")) c.data.concentration = kv.real("data.concentration");
    if (kv.has("data.hard_fraction")) c.data.hard_fraction = kv.real("data.hard_fraction");
    if (kv.has("data.seed")) c.data.seed = u64("data.seed");
    if (kv.has("train.epochs")) c.train.epochs = i32("train.epochs");
    if (kv.has("train.batch_size")) c.train.batch_size = i32("train.batch_size");
    if (kv.has("train.lr")) c.train.lr = kv.real("train.lr");
    if (kv.has("train.lr_drops"))
        c.train.lr_drop_epochs = parse_int_list(kv.get("train.lr_drops"), "train.lr_drops");
    if (kv.has("train.lr_drop_factor")) c.train.lr_drop_factor = kv.real("train.lr_drop_factor");
    if (kv.has("train.momentum")) c.train.momentum = kv.real("train.momentum");
    if (kv.has("train.weight_decay")) c.train.weight_decay = kv.real("train.weight_decay");
    if (kv.has("train.seed")) c.train.seed = u64("train.seed");
    if (kv.has("train.log_interval")) c.train.log_interval = i32("train.log_interval");
    if (kv.has("train.weight_init")) c.train.weight_init = parse_weight_init(kv.get("train.weight_init"));
    if (kv.has("model.embedding_dim")) c.train.model.embedding_dim = i32("model.embedding_dim");
    if (kv.has("model.hidden")) c.train.model.hidden = parse_int_list(kv.get("model.hidden"), "model.hidden");
    if (kv.has("loss.method")) {
        const Method m = parse_method(kv.get("loss.method"));
        if (m != c.train.loss.method) {
            const LossConfig d = LossConfig::defaults(m);
            c.train.loss.method = m;
            c.train.loss.m = d.m;
        }
    }
    if (kv.has("loss.s")) c.train.loss.s = kv.real("loss.s");
    if (kv.has("loss.m")) c.train.loss.m = kv.real("loss.m");
    if (kv.has("loss.h")) c.train.loss.h = kv.real("loss.h");
    if (kv.has("loss.alpha")) c.train.loss.alpha = kv.real("loss.alpha");
    if (kv.has("loss.t_fixed")) c.train.loss.t_fixed = kv.real("loss.t_fixed");
    if (kv.has("eval.far_levels")) c.eval.far_levels = kv.reals("eval.far_levels");
    if (kv.has("eval.positive_pairs"))
        c.eval.positive_pairs = static_cast<std::size_t>(kv.integer("eval.positive_pairs"));
    if (kv.has("eval.negative_pairs"))
        c.eval.negative_pairs = static_cast<std::size_t>(kv.integer("eval.negative_pairs"));
    if (kv.has("eval.holdout")) c.eval.holdout = kv.real("eval.holdout");
    return c;
}

inline constexpr const char* kConfigHeader = "adasin-config v1";

inline std::string config_text(const ExperimentConfig& c) { return to_keyvalues(c).to_string(kConfigHeader); }

inline ExperimentConfig read_config(const std::filesystem::path& file, ExperimentConfig base = {}) {
    return apply_keyvalues(KeyValues::parse(read_file(file.string())), std::move(base));
}

// ---------------------------------------------------------------------------
// Training log

inline constexpr const char* kTrainLogHeader = "# adasin-train-log v1";

inline std::string train_log_csv(const std::vector<TrainLogRecord>& log) {
    std::string out = std::string(kTrainLogHeader) +
                      "\niteration,epoch,loss,t,mean_phi,mean_difficulty,hard_fraction,lr\n";
    for (const TrainLogRecord& r : log)
        out += std::to_string(r.iteration) + "," + std::to_string(r.epoch) + "," + format_real(r.loss) +
               "," + format_real(r.t) + "," + format_real(r.mean_phi) + "," +
               format_real(r.mean_difficulty) + "," + format_real(r.hard_fraction) + "," +
               format_real(r.lr) + "\n";
    return out;
}

inline std::vector<TrainLogRecord> parse_train_log(const std::string& text) {
    std::vector<TrainLogRecord> log;
    for (const auto& c : read_csv_rows(text, kTrainLogHeader, "train_log.csv")) {
        if (c.size() != 8) throw IOError("train_log.csv: expected 8 columns");
        log.push_back({static_cast<std::uint64_t>(parse_integer(c[0], "iteration")),
                       static_cast<int>(parse_integer(c[1], "epoch")), parse_real(c[2], "loss"),
                       parse_real(c[3], "t"), parse_real(c[4], "mean_phi"),
                       parse_real(c[5], "mean_difficulty"), parse_real(c[6], "hard_fraction"),
                       parse_real(c[7], "lr")});
    }
    if (log.empty()) throw EmptyLog("train_log.csv has no records");
    return log;
}

// ---------------------------------------------------------------------------
// Trained parameters

inline KeyValues parameters_to_keyvalues(const TrainResult& r) {
    KeyValues kv;
    kv.set("layers", static_cast<unsigned long long>(r.model.layers.size()));
    for (std::size_t l = 0; l < r.model.layers.size(); ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        const Layer& layer = r.model.layers[l];
        kv.set(p + "rows", static_cast<long long>(layer.weight.rows()));
        kv.set(p + "cols", static_cast<long long>(layer.weight.cols()));
        kv.set(p + "weight", matrix_to_string(layer.weight));
        kv.set(p + "bias", matrix_to_string(layer.bias.transpose()));
    }
    kv.set("class_weights.rows", static_cast<long long>(r.weights.dim()));
    kv.set("class_weights.cols", static_cast<long long>(r.weights.classes()));
    kv.set("class_weights", matrix_to_string(r.weights.weights));
    kv.set("state.t", r.state.t);
    kv.set("state.k", static_cast<unsigned long long>(r.state.k));
    return kv;
}

inline TrainResult parameters_from_keyvalues(const KeyValues& kv) {
    TrainResult r;
    const auto layers = kv.integer("layers");
    if (layers < 1) throw IOError("parameters: no layers");
    for (long long l = 0; l < layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        const auto rows = kv.integer(p + "rows");
        const auto cols = kv.integer(p + "cols");
        Layer layer;
        layer.weight = matrix_from_string(kv.get(p + "weight"), rows, cols, p + "weight");
        layer.bias = matrix_from_string(kv.get(p + "bias"), 1, rows, p + "bias").transpose();
        r.model.layers.push_back(std::move(layer));
    }
    r.weights.weights = matrix_from_string(kv.get("class_weights"), kv.integer("class_weights.rows"),
                                           kv.integer("class_weights.cols"), "class_weights");
    r.state.t = kv.real("state.t");
    r.state.k = static_cast<std::uint64_t>(kv.integer("state.k"));
    return r;
}

// ---------------------------------------------------------------------------
// Runs

struct ExperimentData {
    Dataset train;
    Dataset holdout;
    PairList pairs;  // indices into holdout
};

inline ExperimentData prepare_data(const ExperimentConfig& cfg) {
    const Dataset full = cfg.data_dir.empty() ? generate(cfg.data) : read_dataset(cfg.data_dir);
    auto [train, holdout] = split_holdout(full, cfg.eval.holdout);
    PairList pairs = make_pairs(holdout.labels, cfg.eval.positive_pairs, cfg.eval.negative_pairs, cfg.seed);
    return {std::move(train), std::move(holdout), std::move(pairs)};
}

struct RunSummary {
    Method method = Method::AdaSin;
    std::uint64_t seed = 0;
    VerificationReport verification;
    std::uint64_t iterations = 0;
    double initial_mean_difficulty = 0.0;  // iteration-0 record
    double final_mean_difficulty = 0.0;    // mean over final-epoch records
    double holdout_mean_difficulty = 0.0;
    double initial_mean_phi = 0.0;
    double final_mean_phi = 0.0;
    double max_mean_phi = 0.0;
    double final_t = 0.0;
    double final_loss = 0.0;
};

struct RunOutcome {
    ExperimentConfig config;
    TrainResult result;
    RunSummary summary;
};

inline RunSummary summarize_run(const ExperimentConfig& cfg, const TrainResult& r,
                                const ExperimentData& data) {
    if (r.log.empty()) throw EmptyLog("training produced no log records");
    RunSummary s;
    s.method = cfg.train.loss.method;
    s.seed = cfg.seed;
    const Matrix emb = embed(r.model, data.holdout.inputs);
    s.verification = verify(emb, data.pairs, cfg.eval.far_levels);
    s.holdout_mean_difficulty = mean_difficulty(emb, data.holdout.labels, r.weights);
    s.iterations = r.log.back().iteration;
    s.initial_mean_difficulty = r.log.front().mean_difficulty;
    s.initial_mean_phi = r.log.front().mean_phi;
    s.final_mean_phi = r.log.back().mean_phi;
    s.final_t = r.log.back().t;
    s.final_loss = r.log.back().loss;
    const int last_epoch = r.log.back().epoch;
    double sum = 0.0;
    std::size_t count = 0;
    s.max_mean_phi = r.log.front().mean_phi;
    for (const TrainLogRecord& rec : r.log) {
        s.max_mean_phi = std::max(s.max_mean_phi, rec.mean_phi);
        if (rec.epoch != last_epoch || rec.iteration == 0) continue;
        sum += rec.mean_difficulty;
        ++count;
    }
    s.final_mean_difficulty = sum / static_cast<double>(count);
    return s;
}

inline RunOutcome run_experiment(const ExperimentConfig& cfg, const IterationObserver& observer = {}) {
    cfg.validate();
    const ExperimentData data = prepare_data(cfg);
    RunOutcome out{cfg, train(cfg.train, data.train, observer), {}};
    out.summary = summarize_run(cfg, out.result, data);
    return out;
}

inline KeyValues summary_keyvalues(const RunSummary& s) {
    KeyValues kv;
    kv.set("method", std::string(method_name(s.method)));
    kv.set("seed", static_cast<unsigned long long>(s.seed));
    kv.set("iterations", static_cast<unsigned long long>(s.iterations));
    kv.set("accuracy", s.verification.accuracy_at_best_threshold);
    kv.set("best_threshold", s.verification.best_threshold);
    kv.set("pairs.positive", static_cast<unsigned long long>(s.verification.n_pos));
    kv.set("pairs.negative", static_cast<unsigned long long>(s.verification.n_neg));
    kv.set("lowest_far_level", s.verification.n_neg ? 1.0 / static_cast<double>(s.verification.n_neg) : 0.0);
    for (const TarAtFar& e : s.verification.tar_at_far)
        kv.set("tar_at_far." + format_real(e.far_level), e.tar);
    kv.set("mean_difficulty.initial", s.initial_mean_difficulty);
    kv.set("mean_difficulty.final_epoch", s.final_mean_difficulty);
    kv.set("mean_difficulty.holdout", s.holdout_mean_difficulty);
    kv.set("mean_phi.initial", s.initial_mean_phi);
    kv.set("mean_phi.final", s.final_mean_phi);
    kv.set("mean_phi.max", s.max_mean_phi);
    kv.set("t.final", s.final_t);
    kv.set("loss.final", s.final_loss);
    return kv;
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IOError("cannot create '" + dir.string() + "': " + ec.message());
}

/// config.txt, train_log.csv, parameters.txt, verification.csv,
/// compactness.csv and summary.txt.
inline void write_run(const std::filesystem::path& dir, const RunOutcome& run) {
    ensure_directory(dir);
    write_file((dir / "config.txt").string(), config_text(run.config));
    write_file((dir / "train_log.csv").string(), train_log_csv(run.result.log));
    write_file((dir / "parameters.txt").string(),
               parameters_to_keyvalues(run.result).to_string("adasin-parameters v1"));
    write_file((dir / "verification.csv").string(), verification_csv(run.summary.verification));
    write_file((dir / "compactness.csv").string(), compactness_csv(compactness_curve(run.result.log)));
    write_file((dir / "summary.txt").string(), summary_keyvalues(run.summary).to_string("adasin-run-summary v1"));
}

// ---------------------------------------------------------------------------
// Commands

inline Dataset cmd_gen(const SyntheticSpec& spec, std::size_t positive_pairs, std::size_t negative_pairs,
                       const std::filesystem::path& out) {
    const Dataset ds = generate(spec);
    write_dataset(out, ds, make_pairs(ds.labels, positive_pairs, negative_pairs, spec.seed));
    return ds;
}

inline RunOutcome cmd_train(const ExperimentConfig& cfg) {
    RunOutcome run = run_experiment(cfg);
    write_run(cfg.output_dir, run);
    return run;
}

/// The training loss of `method` with the shared hyperparameters of `base`.
/// SphereFace keeps its own integer margin.
inline LossConfig loss_for(Method method, const LossConfig& base) {
    LossConfig c = LossConfig::defaults(method);
    c.s = base.s;
    c.h = base.h;
    c.alpha = base.alpha;
    c.t_fixed = base.t_fixed;
    if (method != Method::SphereFace) c.m = base.m;
    return c;
}

inline constexpr const char* kComparisonHeader = "# adasin-comparison v1";

inline std::string comparison_csv(const ExperimentConfig& cfg, const std::vector<RunSummary>& runs) {
    std::string out = std::string(kComparisonHeader) + "\nmethod,seed,hard_fraction,accuracy,best_threshold";
    for (double f : cfg.eval.far_levels) out += ",tar_at_far_" + format_real(f);
    out += ",initial_mean_difficulty,final_mean_difficulty,holdout_mean_difficulty,final_t,final_loss\n";
    for (const RunSummary& s : runs) {
        out += std::string(method_name(s.method)) + "," + std::to_string(s.seed) + "," +
               format_real(cfg.data.hard_fraction) + "," +
               format_real(s.verification.accuracy_at_best_threshold) + "," +
               format_real(s.verification.best_threshold);
        for (const TarAtFar& e : s.verification.tar_at_far) out += "," + format_real(e.tar);
        out += "," + format_real(s.initial_mean_difficulty) + "," + format_real(s.final_mean_difficulty) +
               "," + format_real(s.holdout_mean_difficulty) + "," + format_real(s.final_t) + "," +
               format_real(s.final_loss) + "\n";
    }
    return out;
}

inline const char* direction(double delta) { return delta < 0.0 ? "lower" : delta > 0.0 ? "higher" : "equal"; }

/// Ranking by verification accuracy (ties keep input order) and the change
/// in final-epoch mean D of every method relative to the first one.
inline KeyValues comparison_summary(const std::vector<RunSummary>& runs) {
    KeyValues kv;
    std::vector<std::size_t> order(runs.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return runs[a].verification.accuracy_at_best_threshold > runs[b].verification.accuracy_at_best_threshold;
    });
    std::string names;
    for (const RunSummary& s : runs) names += (names.empty() ? "" : ",") + std::string(method_name(s.method));
    kv.set("methods", names);
    kv.set("baseline", std::string(method_name(runs.front().method)));
    for (std::size_t r = 0; r < order.size(); ++r)
        kv.set("rank." + std::to_string(r + 1), std::string(method_name(runs[order[r]].method)));
    for (const RunSummary& s : runs) {
        const std::string name(method_name(s.method));
        kv.set("accuracy." + name, s.verification.accuracy_at_best_threshold);
        kv.set("mean_difficulty." + name, s.final_mean_difficulty);
        if (&s == &runs.front()) continue;
        const double delta = s.final_mean_difficulty - runs.front().final_mean_difficulty;
        kv.set("delta_mean_difficulty." + name, delta);
        kv.set("delta_direction." + name, std::string(direction(delta)));
    }
    return kv;
}

struct Comparison {
    std::vector<RunSummary> runs;
    KeyValues summary;
};

/// Trains every method from the same seed on the same data, concurrently,
/// writing each run to <output_dir>/<method>.
inline Comparison cmd_compare(const ExperimentConfig& cfg, const std::vector<Method>& methods) {
    if (methods.size() < 2) throw ConfigError("compare needs at least two methods");
    std::set<Method> seen(methods.begin(), methods.end());
    if (seen.size() != methods.size()) throw ConfigError("compare methods must be distinct");
    cfg.validate();

    const std::filesystem::path root = cfg.output_dir;
    std::vector<std::future<RunSummary>> jobs;
    for (Method m : methods) {
        ExperimentConfig c = cfg;
        c.train.loss = loss_for(m, cfg.train.loss);
        c.output_dir = (root / std::string(method_name(m))).string();
        jobs.push_back(std::async(std::launch::async, [c] { return cmd_train(c).summary; }));
    }
    Comparison out;
    for (auto& j : jobs) out.runs.push_back(j.get());
    out.summary = comparison_summary(out.runs);
    ensure_directory(root);
    write_file((root / "comparison.csv").string(), comparison_csv(cfg, out.runs));
    write_file((root / "summary.txt").string(), out.summary.to_string("adasin-comparison-summary v1"));
    return out;
}

struct EvalOutcome {
    VerificationReport verification;
    double mean_difficulty = 0.0;
};

/// Re-evaluates a finished run. With an empty `data_dir` the run's own
/// holdout pairs are rebuilt from its config; otherwise the dataset's
/// samples and pairs.csv are used.
inline EvalOutcome cmd_eval(const std::filesystem::path& run_dir, const std::string& data_dir,
                            const std::vector<double>& far_levels) {
    const ExperimentConfig cfg = read_config(run_dir / "config.txt");
    const TrainResult params =
        parameters_from_keyvalues(KeyValues::parse(read_file((run_dir / "parameters.txt").string())));
    Dataset ds;
    PairList pairs;
    if (data_dir.empty()) {
        ExperimentData data = prepare_data(cfg);
        ds = std::move(data.holdout);
        pairs = std::move(data.pairs);
    } else {
        ds = read_dataset(data_dir);
        pairs = read_pairs(std::filesystem::path(data_dir) / "pairs.csv");
    }
    if (ds.inputs.cols() != params.model.input_dim())
        throw ShapeMismatch("dataset width does not match the trained model");
    if (ds.classes() != params.weights.classes())
        throw ShapeMismatch("dataset class count does not match the trained class weights");
    const Matrix emb = embed(params.model, ds.inputs);
    EvalOutcome out;
    out.verification = verify(emb, pairs, far_levels.empty() ? cfg.eval.far_levels : far_levels);
    out.mean_difficulty = mean_difficulty(emb, ds.labels, params.weights);
    return out;
}

}  // namespace adasin
