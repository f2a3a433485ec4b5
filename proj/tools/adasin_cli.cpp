// adasin: gen, train, compare, gradcheck and eval over synthetic data.
//
// Configuration precedence, lowest first: built-in standard benchmark,
// --preset, --config file, individual flags.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adasin/experiment.hpp"

namespace {

using namespace adasin;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// String-valued flags that map one-to-one onto config keys.
struct Overrides {
    std::map<std::string, std::string> values;
    std::vector<std::pair<CLI::Option*, std::string>> options;

    CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key,
                     const std::string& help) {
        CLI::Option* opt = app->add_option(flag, values[key], help);
        options.emplace_back(opt, key);
        return opt;
    }

    KeyValues collect() const {
        KeyValues kv;
        for (const auto& [opt, key] : options)
            if (opt->count() > 0) kv.set(key, values.at(key));
        return kv;
    }
};

struct ExperimentFlags {
    Overrides overrides;
    std::string preset = "standard";
    std::string config;
};

void add_data_flags(CLI::App* app, Overrides& o) {
    o.add(app, "--classes", "data.n_classes", "number of classes");
    o.add(app, "--dim", "data.dim", "input dimension");
    o.add(app, "--per-class", "data.samples_per_class", "samples per class");
    o.add(app, "--concentration", "data.concentration", "inverse noise scale of easy samples");
    o.add(app, "--hard-fraction", "data.hard_fraction", "share of samples drawn with 10x noise");
}

void add_experiment_flags(CLI::App* app, ExperimentFlags& f, bool with_loss) {
    Overrides& o = f.overrides;
    app->add_option("--preset", f.preset, "standard (hard_fraction 0.3) or hard-heavy (0.5)")
        ->check(CLI::IsMember({"standard", "hard-heavy"}));
    app->add_option("--config", f.config, "flat key=value config file")->check(CLI::ExistingFile);
    o.add(app, "--seed", "seed", "top-level seed");
    o.add(app, "--out", "output_dir", "output directory");
    o.add(app, "--data", "data.dir", "dataset directory written by gen")->check(CLI::ExistingDirectory);
    add_data_flags(app, o);
    if (with_loss)
        o.add(app, "--loss", "loss.method", "loss method")->check(CLI::IsMember(method_names()));
    o.add(app, "--s", "loss.s", "feature scale");
    o.add(app, "--m", "loss.m", "angular margin (integer multiplier for sphereface)");
    o.add(app, "--h", "loss.h", "difficulty weight of the modulation coefficient");
    o.add(app, "--alpha", "loss.alpha", "EMA weight of the batch mean positive cosine");
    o.add(app, "--t-fixed", "loss.t_fixed", "fixed negative weight of mv-arc-softmax");
    o.add(app, "--lr", "train.lr", "initial learning rate");
    o.add(app, "--epochs", "train.epochs", "training epochs");
    o.add(app, "--batch", "train.batch_size", "batch size");
    o.add(app, "--momentum", "train.momentum", "SGD momentum");
    o.add(app, "--weight-decay", "train.weight_decay", "L2 weight decay");
    o.add(app, "--lr-drops", "train.lr_drops", "comma-separated zero-based epochs of 10x drops");
    o.add(app, "--log-interval", "train.log_interval", "iterations between log records");
    o.add(app, "--weight-init", "train.weight_init", "isotropic or class-mean")
        ->check(CLI::IsMember({"isotropic", "class-mean"}));
    o.add(app, "--holdout", "eval.holdout", "per-class share held out for verification");
    o.add(app, "--far", "eval.far_levels", "comma-separated FAR levels");
    o.add(app, "--pairs-pos", "eval.positive_pairs", "positive verification pairs");
    o.add(app, "--pairs-neg", "eval.negative_pairs", "negative verification pairs");
}

ExperimentConfig resolve(const ExperimentFlags& f) {
    ExperimentConfig cfg = standard_benchmark(0, f.preset == "hard-heavy" ? 0.5 : 0.3);
    if (!f.config.empty()) cfg = read_config(f.config, cfg);
    cfg = apply_keyvalues(f.overrides.collect(), cfg);
    cfg.validate();
    return cfg;
}

void print_summary(const RunSummary& s) {
    std::printf("%-14s seed=%llu accuracy=%.4f final_D=%.4f holdout_D=%.4f final_t=%.4f\n",
                std::string(method_name(s.method)).c_str(), static_cast<unsigned long long>(s.seed),
                s.verification.accuracy_at_best_threshold, s.final_mean_difficulty,
                s.holdout_mean_difficulty, s.final_t);
    for (const TarAtFar& e : s.verification.tar_at_far)
        std::printf("  TAR@FAR=%g: %.4f\n", e.far_level, e.tar);
}

int run_gradcheck(const std::vector<std::string>& losses, std::size_t trials, std::uint64_t seed,
                  const std::string& out) {
    std::vector<Method> methods;
    for (const std::string& name : losses) {
        if (name == "all") {
            methods.assign(kAllMethods.begin(), kAllMethods.end());
            break;
        }
        methods.push_back(parse_method(name));
    }
    bool ok = true;
    for (Method m : methods) {
        const GradcheckReport rep = gradcheck(LossConfig::defaults(m), trials, seed);
        const KeyValues kv = gradcheck_summary(rep);
        ok = ok && rep.passed();
        std::printf("%-14s max_rel_error=%.3e clamped=%zu %s\n", std::string(method_name(m)).c_str(),
                    rep.max_rel_error(),
                    rep.strata[0].clamped + rep.strata[1].clamped + rep.strata[2].clamped,
                    rep.passed() ? "pass" : "FAIL");
        if (!out.empty()) {
            ensure_directory(out);
            write_file(out + "/gradcheck_" + std::string(method_name(m)) + ".txt",
                       kv.to_string("adasin-gradcheck v1"));
        }
    }
    return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AdaSin angular-margin losses: data, training and diagnostics"};
    app.set_help_flag("--help", "print help and exit");  // -h would collide with --h
    app.require_subcommand(1);

    // gen
    CLI::App* gen = app.add_subcommand("gen", "write a synthetic dataset");
    ExperimentFlags gen_flags;
    std::size_t gen_pos = 1000, gen_neg = 1000;
    std::string gen_out = "data";
    gen->add_option("--config", gen_flags.config, "config file; data.* keys are used")
        ->check(CLI::ExistingFile);
    gen_flags.overrides.add(gen, "--seed", "data.seed", "generator seed");
    add_data_flags(gen, gen_flags.overrides);
    gen->add_option("--pairs-pos", gen_pos, "positive pairs in pairs.csv");
    gen->add_option("--pairs-neg", gen_neg, "negative pairs in pairs.csv");
    gen->add_option("--out", gen_out, "dataset directory");

    // train
    CLI::App* train_cmd = app.add_subcommand("train", "train one method and write a run directory");
    ExperimentFlags train_flags;
    add_experiment_flags(train_cmd, train_flags, true);

    // compare
    CLI::App* compare = app.add_subcommand("compare", "train several methods on identical data");
    ExperimentFlags compare_flags;
    std::vector<std::string> compare_methods;
    add_experiment_flags(compare, compare_flags, false);
    compare->add_option("--methods", compare_methods, "methods to compare")
        ->required()
        ->delimiter(',')
        ->check(CLI::IsMember(method_names()));

    // gradcheck
    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference check of the analytical gradients");
    std::vector<std::string> gc_losses{"adasin"};
    std::size_t gc_trials = 100;
    std::uint64_t gc_seed = 0;
    std::string gc_out;
    std::vector<std::string> gc_choices = method_names();
    gc_choices.push_back("all");
    gc->add_option("--loss", gc_losses, "methods to check, or all")->delimiter(',')->check(CLI::IsMember(gc_choices));
    gc->add_option("--trials", gc_trials, "random instances per method");
    gc->add_option("--seed", gc_seed, "instance seed");
    gc->add_option("--out", gc_out, "directory for key=value reports");

    // eval
    CLI::App* ev = app.add_subcommand("eval", "verification report for a finished run");
    std::string ev_run, ev_data, ev_out;
    std::vector<double> ev_far;
    ev->add_option("--run", ev_run, "run directory written by train")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--data", ev_data, "dataset directory; default rebuilds the run's holdout")
        ->check(CLI::ExistingDirectory);
    ev->add_option("--far", ev_far, "FAR levels")->delimiter(',');
    ev->add_option("--out", ev_out, "directory for eval_verification.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            ExperimentConfig base = standard_benchmark(0);
            if (!gen_flags.config.empty()) base = read_config(gen_flags.config, base);
            base = apply_keyvalues(gen_flags.overrides.collect(), base);
            const Dataset ds = cmd_gen(base.data, gen_pos, gen_neg, gen_out);
            std::printf("wrote %lld samples of %d classes to %s\n", static_cast<long long>(ds.size()),
                        ds.classes(), gen_out.c_str());
        } else if (train_cmd->parsed()) {
            const RunOutcome run = cmd_train(resolve(train_flags));
            print_summary(run.summary);
            std::printf("run written to %s\n", run.config.output_dir.c_str());
        } else if (compare->parsed()) {
            std::vector<Method> methods;
            for (const std::string& name : compare_methods) methods.push_back(parse_method(name));
            const ExperimentConfig cfg = resolve(compare_flags);
            const Comparison cmp = cmd_compare(cfg, methods);
            for (const RunSummary& s : cmp.runs) print_summary(s);
            for (const auto& [k, v] : cmp.summary.entries())
                if (k.rfind("rank.", 0) == 0 || k.rfind("delta_", 0) == 0) std::printf("%s=%s\n", k.c_str(), v.c_str());
            std::printf("comparison written to %s\n", cfg.output_dir.c_str());
        } else if (gc->parsed()) {
            return run_gradcheck(gc_losses, gc_trials, gc_seed, gc_out);
        } else if (ev->parsed()) {
            const EvalOutcome out = cmd_eval(ev_run, ev_data, ev_far);
            std::printf("accuracy=%.4f threshold=%.6f mean_D=%.4f pairs=%zu/%zu\n",
                        out.verification.accuracy_at_best_threshold, out.verification.best_threshold,
                        out.mean_difficulty, out.verification.n_pos, out.verification.n_neg);
            for (const TarAtFar& e : out.verification.tar_at_far)
                std::printf("TAR@FAR=%g: %.4f (threshold %.6f)\n", e.far_level, e.tar, e.threshold);
            if (!ev_out.empty()) {
                ensure_directory(ev_out);
                write_file(ev_out + "/eval_verification.csv", verification_csv(out.verification));
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const SpecError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const UnknownMethod& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
