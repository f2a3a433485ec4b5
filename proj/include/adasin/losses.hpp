#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adasin/adaptive.hpp"
#include "adasin/errors.hpp"
#include "adasin/geometry.hpp"

namespace adasin {

enum class Method {
    Softmax,
    SphereFace,
    CosFace,
    ArcFace,
    MvArcSoftmax,
    CurricularFace,
    AdaSin,   // dual adaptive penalty (AdaSin-D)
    AdaSinT,  // Phi on the positive margin only
    AdaSinN,  // Phi on hard negatives only
};

inline constexpr std::array<Method, 9> kAllMethods = {
    Method::Softmax,      Method::SphereFace,     Method::CosFace,
    Method::ArcFace,      Method::MvArcSoftmax,   Method::CurricularFace,
    Method::AdaSin,       Method::AdaSinT,        Method::AdaSinN,
};

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::Softmax: return "softmax";
        case Method::SphereFace: return "sphereface";
        case Method::CosFace: return "cosface";
        case Method::ArcFace: return "arcface";
        case Method::MvArcSoftmax: return "mv-arc-softmax";
        case Method::CurricularFace: return "curricular";
        case Method::AdaSin: return "adasin";
        case Method::AdaSinT: return "adasin-t";
        case Method::AdaSinN: return "adasin-n";
    }
    throw UnknownMethod("unhandled method enumerator");
}

inline std::vector<std::string> method_names() {
    std::vector<std::string> names;
    for (Method m : kAllMethods) names.emplace_back(method_name(m));
    names.emplace_back("adasin-d");
    return names;
}

inline Method parse_method(std::string_view name) {
    if (name == "adasin-d") return Method::AdaSin;
    if (name == "curricularface") return Method::CurricularFace;
    for (Method m : kAllMethods)
        if (method_name(m) == name) return m;
    throw UnknownMethod("unknown loss '" + std::string(name) + "'");
}

inline bool uses_phi_on_margin(Method m) { return m == Method::AdaSin || m == Method::AdaSinT; }
inline bool uses_phi_on_negatives(Method m) { return m == Method::AdaSin || m == Method::AdaSinN; }
inline bool is_adasin_family(Method m) {
    return m == Method::AdaSin || m == Method::AdaSinT || m == Method::AdaSinN;
}

struct LossConfig {
    Method method = Method::AdaSin;
    double s = 64.0;
    double m = 0.5;  // integer multiplier for SphereFace
    double h = 0.85;
    double alpha = 0.99;
    double t_fixed = 0.2;  // MV-Arc-Softmax only

    /// Defaults for `method`. SphereFace takes a multiplicative margin, so its
    /// default is the integer 4 rather than the additive 0.5.
    static LossConfig defaults(Method method) {
        LossConfig cfg;
        cfg.method = method;
        if (method == Method::SphereFace) cfg.m = 4.0;
        return cfg;
    }

    void validate() const {
        ensure<ConfigError>(s > 0.0, "scale s must be positive");
        ensure<ConfigError>(m >= 0.0, "margin m must be non-negative");
        ensure<ConfigError>(h > 0.0 && h <= 1.0, "h must lie in (0, 1]");
        ensure<ConfigError>(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
        if (method == Method::SphereFace)
            ensure<ConfigError>(m >= 1.0 && std::floor(m) == m,
                                "sphereface margin must be a positive integer");
    }
};

/// Branch decisions that the loss treats as constants: hardness flags and
/// the per-sample modulation coefficient. Passing them back into forward()
/// evaluates the loss on a fixed branch, which is what the analytical
/// gradient differentiates.
struct Branches {
    Mask hard;                   // B x n, false on the label column
    std::vector<char> pos_hard;  // B
    Vector phi;                  // B
};

struct LossResult {
    Method method = Method::AdaSin;
    double t = 0.0;
    double loss = 0.0;
    Vector probs;         // P_{y_i}
    Vector sample_loss;   // -log P_{y_i}
    Matrix class_probs;   // full softmax over scaled logits, B x n
    Matrix grad_features; // B x d, filled by backward()
    Matrix grad_weights;  // d x n, filled by backward()
    Branches branches;
    Vector per_sample_difficulty;

    const Mask& hard_flags() const { return branches.hard; }
    const Vector& per_sample_phi() const { return branches.phi; }
};

/// cos of an angle clamped to [0, pi], where cos is monotone.
inline double cos_clamped(double angle) { return std::cos(std::clamp(angle, 0.0, kPi)); }

/// d/dc cos(clamp(theta + shift)) with c = cos(theta); zero where the clamp is active.
inline double additive_margin_slope(double theta, double shift) {
    const double a = theta + shift;
    if (a <= 0.0 || a >= kPi) return 0.0;
    return std::sin(a) / std::sin(theta);
}

struct HardSplit {
    Mask hard;
    std::vector<char> pos_hard;
};

/// hard(i, j) = target(i) < cos(theta_j) for every negative class j; ties are
/// easy. pos_hard(i) compares against the largest negative cosine.
inline HardSplit classify_hard(const AngularLogits& logits, const std::vector<int>& labels,
                               const Vector& target) {
    const auto B = logits.batch();
    const auto n = logits.classes();
    HardSplit out{Mask::Constant(B, n, false), std::vector<char>(static_cast<std::size_t>(B), 0)};
    for (Eigen::Index i = 0; i < B; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        double max_negative = -2.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == y) continue;
            out.hard(i, j) = target(i) < logits.cosines(i, j);
            max_negative = std::max(max_negative, logits.cosines(i, j));
        }
        out.pos_hard[static_cast<std::size_t>(i)] = target(i) < max_negative;
    }
    return out;
}

/// Hardness under the additive angular margin: cos(theta_y + m) against each
/// negative cosine.
inline HardSplit classify_hard(const AngularLogits& logits, const std::vector<int>& labels,
                               double m) {
    validate_labels(labels, logits.classes());
    Vector target(logits.batch());
    for (Eigen::Index i = 0; i < logits.batch(); ++i)
        target(i) = cos_clamped(logits.angles(i, labels[static_cast<std::size_t>(i)]) + m);
    return classify_hard(logits, labels, target);
}

namespace detail {

/// Target logit before any Phi adjustment; also the threshold for hardness.
inline double base_target(const LossConfig& cfg, double cos_y, double theta_y) {
    switch (cfg.method) {
        case Method::Softmax: return cos_y;
        case Method::CosFace: return cos_y - cfg.m;
        case Method::SphereFace: return cos_clamped(cfg.m * theta_y);
        default: return cos_clamped(theta_y + cfg.m);
    }
}

inline double base_target_slope(const LossConfig& cfg, double theta_y) {
    switch (cfg.method) {
        case Method::Softmax:
        case Method::CosFace: return 1.0;
        case Method::SphereFace: {
            const double a = cfg.m * theta_y;
            if (a <= 0.0 || a >= kPi) return 0.0;
            return cfg.m * std::sin(a) / std::sin(theta_y);
        }
        default: return additive_margin_slope(theta_y, cfg.m);
    }
}

inline double hard_negative(const LossConfig& cfg, double t, double phi, double c) {
    switch (cfg.method) {
        case Method::MvArcSoftmax: return (cfg.t_fixed + 1.0) * c + cfg.t_fixed;
        case Method::CurricularFace: return (t + c) * c;
        case Method::AdaSin:
        case Method::AdaSinN: return phi * c;
        default: return c;
    }
}

inline double hard_negative_slope(const LossConfig& cfg, double t, double phi, double c) {
    switch (cfg.method) {
        case Method::MvArcSoftmax: return cfg.t_fixed + 1.0;
        case Method::CurricularFace: return t + 2.0 * c;
        case Method::AdaSin:
        case Method::AdaSinN: return phi;
        default: return 1.0;
    }
}

inline void check_shapes(const AngularLogits& logits, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != logits.batch())
        throw DimensionMismatch("label count does not match logits rows");
    if (logits.batch() == 0) throw EmptyBatch("loss needs at least one sample");
    validate_labels(labels, logits.classes());
}

}  // namespace detail

/// Branch decisions for the current inputs: hardness under the method's own
/// target and Phi from each sample's positive angle and the shared t.
inline Branches compute_branches(const LossConfig& cfg, const AdaptiveState& state,
                                 const AngularLogits& logits, const std::vector<int>& labels) {
    detail::check_shapes(logits, labels);
    const auto B = logits.batch();
    Vector target(B);
    Vector phi(B);
    for (Eigen::Index i = 0; i < B; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        target(i) = detail::base_target(cfg, logits.cosines(i, y), logits.angles(i, y));
        phi(i) = modulation_coefficient(state.t, logits.angles(i, y), cfg.h);
    }
    HardSplit split = classify_hard(logits, labels, target);
    return {std::move(split.hard), std::move(split.pos_hard), std::move(phi)};
}

/// Scaled logits s*T and s*N for every (sample, class), given branch decisions.
inline Matrix assemble_logits(const LossConfig& cfg, const AdaptiveState& state,
                              const AngularLogits& logits, const std::vector<int>& labels,
                              const Branches& br) {
    const auto B = logits.batch();
    const auto n = logits.classes();
    Matrix f(B, n);
    for (Eigen::Index i = 0; i < B; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        const double phi = br.phi(i);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double c = logits.cosines(i, j);
            double value;
            if (j == y) {
                const double theta = logits.angles(i, j);
                value = (uses_phi_on_margin(cfg.method) && br.pos_hard[static_cast<std::size_t>(i)])
                            ? cos_clamped(theta + phi * cfg.m)
                            : detail::base_target(cfg, c, theta);
            } else {
                value = br.hard(i, j) ? detail::hard_negative(cfg, state.t, phi, c) : c;
            }
            f(i, j) = cfg.s * value;
            if (!std::isfinite(f(i, j)))
                throw NonFiniteLogit("logit (" + std::to_string(i) + ", " + std::to_string(j) +
                                     ") is not finite");
        }
    }
    return f;
}

/// Loss value, probabilities and diagnostics. With `frozen` the branch
/// decisions are taken from it instead of being recomputed.
inline LossResult forward(const LossConfig& cfg, const AdaptiveState& state,
                          const AngularLogits& logits, const std::vector<int>& labels,
                          const Branches* frozen = nullptr) {
    cfg.validate();
    detail::check_shapes(logits, labels);
    const auto B = logits.batch();
    const auto n = logits.classes();

    LossResult r;
    r.method = cfg.method;
    r.t = state.t;
    r.branches = frozen ? *frozen : compute_branches(cfg, state, logits, labels);
    if (r.branches.hard.rows() != B || r.branches.hard.cols() != n || r.branches.phi.size() != B)
        throw StateMismatch("frozen branches do not match the logits shape");

    const Matrix f = assemble_logits(cfg, state, logits, labels, r.branches);
    r.class_probs.resize(B, n);
    r.probs.resize(B);
    r.sample_loss.resize(B);
    r.per_sample_difficulty.resize(B);
    double total = 0.0;
    for (Eigen::Index i = 0; i < B; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        // -log P_y = log1p(sum_{j != y} exp(f_j - f_y)); no cancellation when P_y -> 1
        double rest = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != y) rest += std::exp(f(i, j) - f(i, y));
        if (std::isfinite(rest)) {
            r.sample_loss(i) = std::log1p(rest);
        } else {
            const double top = f.row(i).maxCoeff();
            r.sample_loss(i) = top + std::log((f.row(i).array() - top).exp().sum()) - f(i, y);
        }
        const double log_z = f(i, y) + r.sample_loss(i);
        for (Eigen::Index j = 0; j < n; ++j) r.class_probs(i, j) = std::exp(f(i, j) - log_z);
        r.probs(i) = std::exp(-r.sample_loss(i));
        r.per_sample_difficulty(i) = difficulty(logits.angles(i, y));
        total += r.sample_loss(i);
    }
    r.loss = total / static_cast<double>(B);
    return r;
}

/// d(scaled logit)/d(cosine) for every (sample, class) on the recorded branch:
///   positive easy  s * sin(theta_y + m) / sin(theta_y)
///   positive hard  s * sin(theta_y + Phi m) / sin(theta_y)
///   negative easy  s
///   negative hard  s * Phi
/// for AdaSin, and the derivative of each method's own T and N otherwise.
/// Entries whose cosine was clamped get zero.
inline Matrix logit_cosine_slopes(const LossConfig& cfg, const AngularLogits& logits,
                                  const std::vector<int>& labels, const LossResult& r) {
    const auto B = logits.batch();
    const auto n = logits.classes();
    Matrix slope(B, n);
    for (Eigen::Index i = 0; i < B; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        const double phi = r.branches.phi(i);
        for (Eigen::Index j = 0; j < n; ++j) {
            double d;
            if (j == y) {
                const double theta = logits.angles(i, j);
                d = (uses_phi_on_margin(cfg.method) && r.branches.pos_hard[static_cast<std::size_t>(i)])
                        ? additive_margin_slope(theta, phi * cfg.m)
                        : detail::base_target_slope(cfg, theta);
            } else {
                d = r.branches.hard(i, j)
                        ? detail::hard_negative_slope(cfg, r.t, phi, logits.cosines(i, j))
                        : 1.0;
            }
            slope(i, j) = logits.clamped(i, j) ? 0.0 : cfg.s * d;
        }
    }
    return slope;
}

struct Gradients {
    Matrix features;  // B x d
    Matrix weights;   // d x n
};

/// Analytical gradients of the mean loss with respect to the (unit) feature
/// rows and the class weight columns, taking cos = x . w as the bilinear map.
inline Gradients backward(const LossConfig& cfg, const AdaptiveState& state,
                          const AngularLogits& logits, const std::vector<int>& labels,
                          const EmbeddingBatch& batch, const ClassWeights& weights,
                          const LossResult& r) {
    const auto B = logits.batch();
    const auto n = logits.classes();
    if (r.method != cfg.method) throw StateMismatch("result was computed for another method");
    if (r.t != state.t) throw StateMismatch("result was computed with a different t");
    if (r.class_probs.rows() != B || r.class_probs.cols() != n ||
        static_cast<Eigen::Index>(labels.size()) != B)
        throw StateMismatch("result shape does not match the logits");
    if (batch.size() != B || weights.classes() != n || batch.dim() != weights.dim())
        throw StateMismatch("batch or weights do not match the logits");

    Matrix g = r.class_probs;
    for (Eigen::Index i = 0; i < B; ++i) g(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    g = g.cwiseProduct(logit_cosine_slopes(cfg, logits, labels, r)) / static_cast<double>(B);

    return {g * weights.weights.transpose(), batch.features.transpose() * g};
}

/// forward() followed by backward(), with the gradients stored on the result.
inline LossResult forward_backward(const LossConfig& cfg, const AdaptiveState& state,
                                   const EmbeddingBatch& batch, const ClassWeights& weights) {
    const AngularLogits logits = angular_logits(batch, weights);
    LossResult r = forward(cfg, state, logits, batch.labels);
    Gradients g = backward(cfg, state, logits, batch.labels, batch, weights, r);
    r.grad_features = std::move(g.features);
    r.grad_weights = std::move(g.weights);
    return r;
}

}  // namespace adasin
