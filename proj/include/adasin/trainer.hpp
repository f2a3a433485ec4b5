#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "adasin/adaptive.hpp"
#include "adasin/data.hpp"
#include "adasin/errors.hpp"
#include "adasin/geometry.hpp"
#include "adasin/losses.hpp"
#include "adasin/model.hpp"
#include "adasin/random.hpp"
#include "adasin/sgd.hpp"

namespace adasin {

enum class WeightInit {
    Isotropic,  // unit-normalized Gaussian draws
    ClassMean,  // normalized mean embedding of each class under the initial backbone
};

struct TrainConfig {
    int epochs = 12;
    int batch_size = 64;
    double lr = 0.1;
    std::vector<int> lr_drop_epochs = {4, 8, 10};
    double lr_drop_factor = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::uint64_t seed = 0;
    int log_interval = 100;
    WeightInit weight_init = WeightInit::Isotropic;
    LossConfig loss;
    ModelConfig model;

    void validate() const {
        ensure<ConfigError>(epochs >= 1, "epochs must be positive");
        ensure<ConfigError>(batch_size >= 1, "batch_size must be positive");
        ensure<ConfigError>(lr >= 0.0, "lr must be non-negative");
        ensure<ConfigError>(lr_drop_factor > 0.0, "lr_drop_factor must be positive");
        ensure<ConfigError>(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
        ensure<ConfigError>(weight_decay >= 0.0, "weight_decay must be non-negative");
        ensure<ConfigError>(log_interval >= 1, "log_interval must be positive");
        loss.validate();
        model.validate();
    }
};

/// One row of train_log.csv. Iteration 0 describes the untrained model on
/// the first batch with t = 0; later rows describe the batch of that step.
struct TrainLogRecord {
    std::uint64_t iteration = 0;
    int epoch = 0;
    double loss = 0.0;
    double t = 0.0;
    double mean_phi = 0.0;
    double mean_difficulty = 0.0;
    double hard_fraction = 0.0;
    double lr = 0.0;

    bool operator==(const TrainLogRecord&) const = default;
};

/// Everything about one optimizer step, handed to an optional observer.
struct IterationStats {
    std::uint64_t iteration = 0;
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double batch_mean_cosine = 0.0;  // r of this batch
    double t = 0.0;                  // after the EMA update
    double boundary_angle = 0.0;     // min(pi/2, smallest positive angle)
    double mean_phi = 0.0;
    double mean_difficulty = 0.0;
    double hard_fraction = 0.0;
    double mean_curricular_coefficient = 0.0;  // t + cos(theta_j) over hard pairs
    double max_curricular_coefficient = 0.0;
    std::size_t hard_pairs = 0;
    const Vector* phi = nullptr;       // per sample
    const Vector* theta_pos = nullptr; // per sample
};

using IterationObserver = std::function<void(const IterationStats&)>;

struct TrainResult {
    Backbone model;
    ClassWeights weights;
    AdaptiveState state;
    std::vector<TrainLogRecord> log;
};

namespace detail {

struct BatchSummary {
    double mean_phi = 0.0;
    double mean_difficulty = 0.0;
    double hard_fraction = 0.0;
    double mean_curricular = 0.0;
    double max_curricular = 0.0;
    std::size_t hard_pairs = 0;
};

/// mean_phi is the method's own modulation coefficient: t + cos(theta_j)
/// averaged over hard pairs for CurricularFace (t when no pair is hard), and
/// the per-sample Phi averaged over the batch otherwise.
inline BatchSummary summarize(const LossConfig& cfg, const AngularLogits& logits,
                              const LossResult& r) {
    BatchSummary s;
    const auto B = logits.batch();
    double curricular_sum = 0.0;
    s.max_curricular = r.t;
    for (Eigen::Index i = 0; i < B; ++i) {
        s.mean_difficulty += r.per_sample_difficulty(i);
        s.mean_phi += r.branches.phi(i);
        s.hard_fraction += r.branches.pos_hard[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        for (Eigen::Index j = 0; j < logits.classes(); ++j) {
            if (!r.branches.hard(i, j)) continue;
            const double coeff = r.t + logits.cosines(i, j);
            curricular_sum += coeff;
            s.max_curricular = s.hard_pairs ? std::max(s.max_curricular, coeff) : coeff;
            ++s.hard_pairs;
        }
    }
    const double inv = 1.0 / static_cast<double>(B);
    s.mean_difficulty *= inv;
    s.mean_phi *= inv;
    s.hard_fraction *= inv;
    s.mean_curricular = s.hard_pairs ? curricular_sum / static_cast<double>(s.hard_pairs) : r.t;
    if (cfg.method == Method::CurricularFace) s.mean_phi = s.mean_curricular;
    return s;
}

inline std::vector<int> gather_labels(const std::vector<int>& labels,
                                      const std::vector<Eigen::Index>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (Eigen::Index r : rows) out.push_back(labels[static_cast<std::size_t>(r)]);
    return out;
}

inline Matrix gather_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
    return out;
}

inline ClassWeights init_weights(const TrainConfig& cfg, const Backbone& model, const Dataset& data) {
    const auto d = static_cast<Eigen::Index>(cfg.model.embedding_dim);
    if (cfg.weight_init == WeightInit::Isotropic) {
        Rng rng(derive_seed(cfg.seed, "class-weights"));
        return {normalize_columns(gaussian_matrix(d, data.classes(), rng))};
    }
    const Matrix features = backbone_forward(model, data.inputs).features;
    Matrix sums = Matrix::Zero(d, data.classes());
    for (Eigen::Index i = 0; i < data.size(); ++i)
        sums.col(data.labels[static_cast<std::size_t>(i)]) += features.row(i).transpose();
    return {normalize_columns(sums)};
}

}  // namespace detail

/// Seeded SGD over the shallow backbone and the class weights. Per step:
/// cosines, EMA update of t, branch split, loss and gradients, momentum SGD
/// with weight decay, then re-projection of the class weights to unit norm.
inline TrainResult train(const TrainConfig& cfg, const Dataset& data,
                         const IterationObserver& observer = {}) {
    cfg.validate();
    if (data.size() == 0) throw ConfigError("dataset is empty");
    if (data.inputs.cols() != data.spec.dim)
        throw ConfigError("dataset input width does not match its spec");
    validate_labels(data.labels, data.classes());

    TrainResult out;
    out.model = init_backbone(cfg.model, data.inputs.cols(), derive_seed(cfg.seed, "backbone"));
    out.weights = detail::init_weights(cfg, out.model, data);

    std::vector<Layer> velocity;
    for (const Layer& l : out.model.layers)
        velocity.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    Matrix weight_velocity = Matrix::Zero(out.weights.dim(), out.weights.classes());

    const auto N = data.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));

    std::uint64_t iteration = 0;
    TrainLogRecord last;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const SgdOptions opt{scheduled_lr(cfg.lr, cfg.lr_drop_epochs, cfg.lr_drop_factor, epoch),
                             cfg.momentum, cfg.weight_decay};
        for (Eigen::Index start = 0; start < N; start += cfg.batch_size) {
            const Eigen::Index stop = std::min<Eigen::Index>(N, start + cfg.batch_size);
            const std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + stop);
            const BackboneTrace trace = backbone_forward(out.model, detail::gather_rows(data.inputs, rows));
            const EmbeddingBatch batch{trace.features, detail::gather_labels(data.labels, rows)};
            const AngularLogits logits = angular_logits(batch, out.weights);

            const auto B = batch.size();
            std::vector<double> positive(static_cast<std::size_t>(B));
            Vector theta_pos(B);
            for (Eigen::Index i = 0; i < B; ++i) {
                const int y = batch.labels[static_cast<std::size_t>(i)];
                positive[static_cast<std::size_t>(i)] = logits.cosines(i, y);
                theta_pos(i) = logits.angles(i, y);
            }

            if (iteration == 0) {
                const LossResult initial = forward(cfg.loss, out.state, logits, batch.labels);
                const auto s = detail::summarize(cfg.loss, logits, initial);
                out.log.push_back({0, epoch, initial.loss, out.state.t, s.mean_phi,
                                   s.mean_difficulty, s.hard_fraction, opt.lr});
            }

            out.state = update_t(out.state, positive, cfg.loss.alpha);
            ++iteration;

            LossResult r = forward(cfg.loss, out.state, logits, batch.labels);
            if (!std::isfinite(r.loss))
                throw DivergenceDetected("loss is not finite at iteration " + std::to_string(iteration));
            const Gradients g = backward(cfg.loss, out.state, logits, batch.labels, batch, out.weights, r);
            const auto s = detail::summarize(cfg.loss, logits, r);

            if (observer) {
                IterationStats st;
                st.iteration = iteration;
                st.epoch = epoch;
                st.lr = opt.lr;
                st.loss = r.loss;
                st.batch_mean_cosine =
                    std::accumulate(positive.begin(), positive.end(), 0.0) / static_cast<double>(B);
                st.t = out.state.t;
                st.boundary_angle = std::min(kPi / 2, theta_pos.minCoeff());
                st.mean_phi = s.mean_phi;
                st.mean_difficulty = s.mean_difficulty;
                st.hard_fraction = s.hard_fraction;
                st.mean_curricular_coefficient = s.mean_curricular;
                st.max_curricular_coefficient = s.max_curricular;
                st.hard_pairs = s.hard_pairs;
                st.phi = &r.branches.phi;
                st.theta_pos = &theta_pos;
                observer(st);
            }
            last = {iteration, epoch, r.loss, out.state.t, s.mean_phi,
                    s.mean_difficulty, s.hard_fraction, opt.lr};
            if (iteration % static_cast<std::uint64_t>(cfg.log_interval) == 0) out.log.push_back(last);

            const BackboneGradients bg = backbone_backward(out.model, trace, g.features);
            for (std::size_t l = 0; l < out.model.layers.size(); ++l) {
                sgd_step(out.model.layers[l].weight, bg.layers[l].weight, velocity[l].weight, opt);
                sgd_step(out.model.layers[l].bias, bg.layers[l].bias, velocity[l].bias, opt);
            }
            sgd_step(out.weights.weights, g.weights, weight_velocity, opt);
            out.weights.weights = normalize_columns(out.weights.weights);
        }
    }
    if (out.log.back().iteration != iteration) out.log.push_back(last);
    return out;
}

/// Unit embeddings of `inputs` under a trained backbone.
inline Matrix embed(const Backbone& model, const Matrix& inputs) {
    return backbone_forward(model, inputs).features;
}

}  // namespace adasin
