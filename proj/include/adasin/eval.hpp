#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "adasin/adaptive.hpp"
#include "adasin/data.hpp"
#include "adasin/errors.hpp"
#include "adasin/geometry.hpp"
#include "adasin/kvfile.hpp"
#include "adasin/losses.hpp"
#include "adasin/random.hpp"
#include "adasin/trainer.hpp"

namespace adasin {

// ---------------------------------------------------------------------------
// 1:1 verification

struct TarAtFar {
    double far_level = 0.0;
    double tar = 0.0;
    double threshold = 0.0;
    double achieved_far = 0.0;
};

struct VerificationReport {
    double accuracy_at_best_threshold = 0.0;
    double best_threshold = 0.0;
    std::vector<TarAtFar> tar_at_far;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

/// Pairs are accepted when their score is strictly above the threshold.
/// For each FAR level the threshold is the smallest observed score that lets
/// at most FAR * n_neg negatives through.
inline VerificationReport verify_scores(const std::vector<double>& scores,
                                        const std::vector<char>& same,
                                        const std::vector<double>& far_levels) {
    if (scores.size() != same.size()) throw ShapeMismatch("scores and labels differ in length");
    VerificationReport rep;
    std::vector<double> pos, neg;
    for (std::size_t k = 0; k < scores.size(); ++k) (same[k] ? pos : neg).push_back(scores[k]);
    rep.n_pos = pos.size();
    rep.n_neg = neg.size();
    if (pos.empty() || neg.empty())
        throw InsufficientPairs("verification needs at least one positive and one negative pair");
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    auto above = [](const std::vector<double>& sorted, double thr) {
        return static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), thr));
    };

    std::vector<double> candidates = scores;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const double n_pos = static_cast<double>(rep.n_pos);
    const double n_neg = static_cast<double>(rep.n_neg);
    for (double level : far_levels) {
        if (level * n_neg < 1.0 - 1e-12)
            throw InsufficientPairs("FAR " + format_real(level) + " is below 1/n_neg with " +
                                    std::to_string(rep.n_neg) + " negative pairs");
        // above(neg, thr) is non-increasing in thr: binary search the first admissible candidate
        const auto it = std::partition_point(candidates.begin(), candidates.end(), [&](double thr) {
            return above(neg, thr) > level * n_neg;
        });
        const double thr = it == candidates.end() ? candidates.back() : *it;
        rep.tar_at_far.push_back({level, above(pos, thr) / n_pos, thr, above(neg, thr) / n_neg});
    }

    // accept-everything plus every observed score as the cut
    double best = n_pos;
    double best_thr = -std::numeric_limits<double>::infinity();
    for (double thr : candidates) {
        const double correct = above(pos, thr) + (n_neg - above(neg, thr));
        if (correct > best) {
            best = correct;
            best_thr = thr;
        }
    }
    rep.accuracy_at_best_threshold = best / (n_pos + n_neg);
    rep.best_threshold = best_thr;
    return rep;
}

inline std::vector<double> pair_scores(const Matrix& embeddings, const PairList& pairs) {
    std::vector<double> scores;
    scores.reserve(pairs.pairs.size());
    for (const Pair& p : pairs.pairs) {
        if (p.a < 0 || p.b < 0 || p.a >= embeddings.rows() || p.b >= embeddings.rows())
            throw InsufficientPairs("pair index outside the embedding set");
        scores.push_back(embeddings.row(p.a).dot(embeddings.row(p.b)));
    }
    return scores;
}

inline VerificationReport verify(const Matrix& embeddings, const PairList& pairs,
                                 const std::vector<double>& far_levels) {
    std::vector<char> same;
    for (const Pair& p : pairs.pairs) same.push_back(p.same ? 1 : 0);
    return verify_scores(pair_scores(embeddings, pairs), same, far_levels);
}

inline std::string verification_csv(const VerificationReport& rep) {
    std::string out = "# adasin-verification v1\nfar_level,tar,threshold,achieved_far\n";
    for (const TarAtFar& e : rep.tar_at_far)
        out += format_real(e.far_level) + "," + format_real(e.tar) + "," + format_real(e.threshold) +
               "," + format_real(e.achieved_far) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Intra-class compactness

struct CompactnessPoint {
    std::uint64_t iteration;
    double mean_difficulty;
};

/// Mean sin(theta_y / 2) per iteration from raw positive angles.
inline std::vector<CompactnessPoint> compactness_curve(
    const std::vector<std::pair<std::uint64_t, std::vector<double>>>& positive_angles) {
    if (positive_angles.empty()) throw EmptyLog("no iterations to summarize");
    std::vector<CompactnessPoint> out;
    for (const auto& [iteration, angles] : positive_angles) {
        if (angles.empty()) throw EmptyLog("iteration " + std::to_string(iteration) + " has no samples");
        double sum = 0.0;
        for (double a : angles) sum += difficulty(a);
        out.push_back({iteration, sum / static_cast<double>(angles.size())});
    }
    return out;
}

inline std::vector<CompactnessPoint> compactness_curve(const std::vector<TrainLogRecord>& log) {
    if (log.empty()) throw EmptyLog("training log is empty");
    std::vector<CompactnessPoint> out;
    for (const TrainLogRecord& r : log) out.push_back({r.iteration, r.mean_difficulty});
    return out;
}

/// Mean sin(theta_y / 2) of embeddings against their class weights.
inline double mean_difficulty(const Matrix& embeddings, const std::vector<int>& labels,
                              const ClassWeights& weights) {
    const AngularLogits logits = angular_logits({embeddings, labels}, weights);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.batch(); ++i)
        sum += difficulty(logits.angles(i, labels[static_cast<std::size_t>(i)]));
    return sum / static_cast<double>(logits.batch());
}

inline std::string compactness_csv(const std::vector<CompactnessPoint>& curve) {
    std::string out = "# adasin-compactness v1\niteration,mean_difficulty\n";
    for (const auto& p : curve) out += std::to_string(p.iteration) + "," + format_real(p.mean_difficulty) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check

inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckTolerance = 1e-4;
inline constexpr double kGradcheckFloor = 1e-6;
/// Angles closer than this to 0 or pi sit next to the cosine clamp, where the
/// margin terms have third derivatives ~ 1/theta^5 and a 1e-5 central
/// difference is no longer accurate. Such instances are flagged as clamped.
inline constexpr double kGradcheckMinAngle = 0.05;

inline bool near_clamp(const AngularLogits& logits) {
    return logits.clamped.any() || (logits.angles.array() < kGradcheckMinAngle).any() ||
           (logits.angles.array() > kPi - kGradcheckMinAngle).any();
}

enum class Stratum { EasyOnly, HardOnly, Mixed };

inline const char* stratum_name(Stratum s) {
    switch (s) {
        case Stratum::EasyOnly: return "easy";
        case Stratum::HardOnly: return "hard";
        case Stratum::Mixed: return "mixed";
    }
    return "?";
}

struct GradcheckInstance {
    LossConfig config;
    AdaptiveState state;
    EmbeddingBatch batch;
    ClassWeights weights;
};

struct InstanceCheck {
    double rel_features = 0.0;
    double rel_weights = 0.0;
    bool clamped = false;
    // entries per gradient case: positive easy/hard, negative easy/hard
    std::array<std::size_t, 4> cases{};
};

/// max |analytic - numeric| / max(floor, max |analytic|, max |numeric|)
inline double block_relative_error(const Matrix& analytic, const Matrix& numeric) {
    const double scale = std::max({kGradcheckFloor, analytic.cwiseAbs().maxCoeff(),
                                   numeric.cwiseAbs().maxCoeff()});
    return (analytic - numeric).cwiseAbs().maxCoeff() / scale;
}

/// Compares backward() with central differences of forward() on the same
/// branch: hardness flags and Phi are held at their values at the base point.
inline InstanceCheck check_instance(const GradcheckInstance& inst, double step = kGradcheckStep) {
    const auto& cfg = inst.config;
    const AngularLogits logits = angular_logits(inst.batch, inst.weights);
    const LossResult base = forward(cfg, inst.state, logits, inst.batch.labels);
    const Gradients g = backward(cfg, inst.state, logits, inst.batch.labels, inst.batch, inst.weights, base);

    auto loss_at = [&](const EmbeddingBatch& b, const ClassWeights& w) {
        return forward(cfg, inst.state, angular_logits(b, w), b.labels, &base.branches).loss;
    };

    Matrix num_features(inst.batch.features.rows(), inst.batch.features.cols());
    for (Eigen::Index i = 0; i < num_features.rows(); ++i) {
        for (Eigen::Index q = 0; q < num_features.cols(); ++q) {
            EmbeddingBatch plus = inst.batch, minus = inst.batch;
            plus.features(i, q) += step;
            minus.features(i, q) -= step;
            num_features(i, q) = (loss_at(plus, inst.weights) - loss_at(minus, inst.weights)) / (2 * step);
        }
    }
    Matrix num_weights(inst.weights.weights.rows(), inst.weights.weights.cols());
    for (Eigen::Index q = 0; q < num_weights.rows(); ++q) {
        for (Eigen::Index j = 0; j < num_weights.cols(); ++j) {
            ClassWeights plus = inst.weights, minus = inst.weights;
            plus.weights(q, j) += step;
            minus.weights(q, j) -= step;
            num_weights(q, j) = (loss_at(inst.batch, plus) - loss_at(inst.batch, minus)) / (2 * step);
        }
    }

    InstanceCheck out;
    out.rel_features = block_relative_error(g.features, num_features);
    out.rel_weights = block_relative_error(g.weights, num_weights);
    out.clamped = near_clamp(logits);
    for (Eigen::Index i = 0; i < logits.batch(); ++i) {
        const int y = inst.batch.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < logits.classes(); ++j) {
            const std::size_t c = j == y ? (base.branches.pos_hard[static_cast<std::size_t>(i)] ? 1 : 0)
                                         : (base.branches.hard(i, j) ? 3 : 2);
            ++out.cases[c];
        }
    }
    return out;
}

/// Random small instance whose samples are all easy, all hard or a mix,
/// judged by the method's own hardness rule.
inline GradcheckInstance random_instance(const LossConfig& cfg, Stratum stratum, Rng& rng) {
    std::uniform_int_distribution<int> batch_dist(2, 8), class_dist(2, 5), dim_dist(3, 16);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    for (;;) {
        GradcheckInstance inst;
        inst.config = cfg;
        inst.state = {0.9 * unit(rng), 1};
        const int B = batch_dist(rng), n = class_dist(rng), d = dim_dist(rng);
        inst.weights.weights = normalize_columns(gaussian_matrix(d, n, rng));
        inst.batch.features.resize(B, d);
        inst.batch.labels.resize(static_cast<std::size_t>(B));

        bool ok = true;
        for (int i = 0; i < B && ok; ++i) {
            const bool want_hard = stratum == Stratum::HardOnly || (stratum == Stratum::Mixed && i % 2 == 1);
            bool placed = false;
            for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                const int y = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
                int anchor = y;
                if (want_hard) anchor = static_cast<int>((y + 1 + rng() % static_cast<std::uint64_t>(n - 1)) % n);
                const double spread = want_hard ? 0.6 : 0.25 * unit(rng) + 0.05;
                Vector v = inst.weights.weights.col(anchor);
                for (int q = 0; q < d; ++q) v(q) += spread * normal(rng) / std::sqrt(static_cast<double>(d));
                if (v.norm() < 1e-6) continue;
                v.normalize();

                EmbeddingBatch one{v.transpose(), {y}};
                const AngularLogits l = angular_logits(one, inst.weights);
                if (near_clamp(l)) continue;
                const Branches br = compute_branches(cfg, inst.state, l, one.labels);
                if ((br.pos_hard[0] != 0) != want_hard) continue;
                inst.batch.features.row(i) = v.transpose();
                inst.batch.labels[static_cast<std::size_t>(i)] = y;
                placed = true;
            }
            ok = placed;
        }
        if (ok) return inst;
    }
}

struct StratumSummary {
    std::size_t instances = 0;
    std::size_t clamped = 0;
    double max_rel_features = 0.0;
    double max_rel_weights = 0.0;
    double max_rel_clamped = 0.0;
};

struct GradcheckReport {
    Method method = Method::AdaSin;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::array<StratumSummary, 3> strata{};
    std::array<std::size_t, 4> cases{};

    double max_rel_error() const {
        double m = 0.0;
        for (const auto& s : strata) m = std::max({m, s.max_rel_features, s.max_rel_weights});
        return m;
    }
    bool passed() const { return max_rel_error() <= kGradcheckTolerance; }
};

/// `trials` random instances cycling through easy-only, hard-only and mixed
/// batches. Instances touching the cosine clamp are reported separately and
/// do not count toward the pass criterion.
inline GradcheckReport gradcheck(const LossConfig& cfg, std::size_t trials, std::uint64_t seed) {
    cfg.validate();
    GradcheckReport rep;
    rep.method = cfg.method;
    rep.trials = trials;
    rep.seed = seed;
    Rng rng(derive_seed(seed, "gradcheck", static_cast<std::uint64_t>(cfg.method)));
    for (std::size_t k = 0; k < trials; ++k) {
        const auto stratum = static_cast<Stratum>(k % 3);
        const GradcheckInstance inst = random_instance(cfg, stratum, rng);
        const InstanceCheck chk = check_instance(inst);
        StratumSummary& s = rep.strata[static_cast<std::size_t>(stratum)];
        ++s.instances;
        if (chk.clamped) {
            ++s.clamped;
            s.max_rel_clamped = std::max({s.max_rel_clamped, chk.rel_features, chk.rel_weights});
            continue;
        }
        s.max_rel_features = std::max(s.max_rel_features, chk.rel_features);
        s.max_rel_weights = std::max(s.max_rel_weights, chk.rel_weights);
        for (std::size_t c = 0; c < 4; ++c) rep.cases[c] += chk.cases[c];
    }
    return rep;
}

inline KeyValues gradcheck_summary(const GradcheckReport& rep) {
    KeyValues kv;
    kv.set("method", std::string(method_name(rep.method)));
    kv.set("trials", static_cast<unsigned long long>(rep.trials));
    kv.set("seed", static_cast<unsigned long long>(rep.seed));
    kv.set("step", kGradcheckStep);
    kv.set("tolerance", kGradcheckTolerance);
    for (std::size_t k = 0; k < 3; ++k) {
        const std::string p = stratum_name(static_cast<Stratum>(k));
        const StratumSummary& s = rep.strata[k];
        kv.set(p + ".instances", static_cast<unsigned long long>(s.instances));
        kv.set(p + ".clamped", static_cast<unsigned long long>(s.clamped));
        kv.set(p + ".max_rel_features", s.max_rel_features);
        kv.set(p + ".max_rel_weights", s.max_rel_weights);
        kv.set(p + ".max_rel_clamped", s.max_rel_clamped);
    }
    kv.set("cases.positive_easy", static_cast<unsigned long long>(rep.cases[0]));
    kv.set("cases.positive_hard", static_cast<unsigned long long>(rep.cases[1]));
    kv.set("cases.negative_easy", static_cast<unsigned long long>(rep.cases[2]));
    kv.set("cases.negative_hard", static_cast<unsigned long long>(rep.cases[3]));
    kv.set("max_rel_error", rep.max_rel_error());
    kv.set("pass", rep.passed() ? 1 : 0);
    return kv;
}

}  // namespace adasin
