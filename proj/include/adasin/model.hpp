#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "adasin/errors.hpp"
#include "adasin/geometry.hpp"
#include "adasin/random.hpp"

namespace adasin {

/// Shallow stand-in for a CNN backbone: one affine layer, or two with a tanh
/// between them, followed by row normalization.
struct ModelConfig {
    int embedding_dim = 16;
    std::vector<int> hidden = {64};  // empty: single affine layer

    void validate() const {
        ensure<ConfigError>(embedding_dim >= 2, "embedding_dim must be at least 2");
        ensure<ConfigError>(hidden.size() <= 1, "at most one hidden layer is supported");
        for (int h : hidden) ensure<ConfigError>(h >= 1, "hidden width must be positive");
    }
};

struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

struct Backbone {
    std::vector<Layer> layers;

    Eigen::Index input_dim() const { return layers.front().weight.cols(); }
    Eigen::Index output_dim() const { return layers.back().weight.rows(); }
};

inline Backbone init_backbone(const ModelConfig& cfg, Eigen::Index input_dim, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    Backbone b;
    Eigen::Index in = input_dim;
    std::vector<int> widths = cfg.hidden;
    widths.push_back(cfg.embedding_dim);
    for (int out : widths) {
        const double stddev = 1.0 / std::sqrt(static_cast<double>(in));
        b.layers.push_back({gaussian_matrix(out, in, rng, stddev), Vector::Zero(out)});
        in = out;
    }
    return b;
}

inline Backbone identity_backbone(Eigen::Index dim) {
    return Backbone{{Layer{Matrix::Identity(dim, dim), Vector::Zero(dim)}}};
}

/// Intermediate values kept for backpropagation.
struct BackboneTrace {
    Matrix input;       // B x in
    Matrix activation;  // B x hidden, tanh output (two-layer models)
    Matrix raw;         // B x d, pre-normalization embedding
    Vector norms;       // B
    Matrix features;    // B x d, unit rows
};

inline BackboneTrace backbone_forward(const Backbone& model, const Matrix& input) {
    if (input.cols() != model.input_dim())
        throw ShapeMismatch("input has " + std::to_string(input.cols()) + " columns, model expects " +
                            std::to_string(model.input_dim()));
    BackboneTrace tr;
    tr.input = input;
    Matrix h = input;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const Layer& layer = model.layers[l];
        h = (h * layer.weight.transpose()).rowwise() + layer.bias.transpose();
        if (l + 1 < model.layers.size()) {
            h = h.array().tanh().matrix();
            tr.activation = h;
        }
    }
    tr.raw = h;
    tr.norms = h.rowwise().norm();
    tr.features = normalize_rows(h);
    return tr;
}

/// Raw inputs mapped to unit embeddings, paired with their labels.
inline EmbeddingBatch shallow_forward(const Backbone& model, const Matrix& input,
                                      std::vector<int> labels = {}) {
    return {backbone_forward(model, input).features, std::move(labels)};
}

struct BackboneGradients {
    std::vector<Layer> layers;
};

/// Backpropagates d(loss)/d(unit features) through the normalization and the
/// affine layers. x = z/|z| gives dL/dz = (g - x (x . g)) / |z|.
inline BackboneGradients backbone_backward(const Backbone& model, const BackboneTrace& tr,
                                           const Matrix& grad_features) {
    if (grad_features.rows() != tr.features.rows() || grad_features.cols() != tr.features.cols())
        throw ShapeMismatch("feature gradient shape does not match the forward trace");
    const Vector dots = (grad_features.cwiseProduct(tr.features)).rowwise().sum();
    Matrix g = grad_features - tr.features.cwiseProduct(dots.replicate(1, tr.features.cols()));
    g = g.cwiseQuotient(tr.norms.replicate(1, g.cols()));

    BackboneGradients out;
    out.layers.resize(model.layers.size());
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const Matrix& below = l == 0 ? tr.input : tr.activation;
        out.layers[l].weight = g.transpose() * below;
        out.layers[l].bias = g.colwise().sum().transpose();
        if (l > 0) {
            g = g * model.layers[l].weight;
            g = g.cwiseProduct((1.0 - tr.activation.array().square()).matrix());
        }
    }
    return out;
}

}  // namespace adasin
