#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adasin/errors.hpp"

namespace adasin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kPi = std::numbers::pi;

/// Cosines are kept inside [-1 + kCosineClamp, 1 - kCosineClamp] so that
/// sin(theta) never vanishes in the margin derivatives.
inline constexpr double kCosineClamp = 1e-7;
inline constexpr double kMinNorm = 1e-12;
inline constexpr double kAngleTolerance = 1e-9;

/// B x d unit-norm feature rows with their class labels.
struct EmbeddingBatch {
    Matrix features;
    std::vector<int> labels;

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
};

/// d x n matrix whose columns are unit-norm class centers.
struct ClassWeights {
    Matrix weights;

    Eigen::Index dim() const { return weights.rows(); }
    Eigen::Index classes() const { return weights.cols(); }
};

/// Per (sample, class) cosine and angle. `clamped` marks entries whose raw
/// dot product fell outside the clamp window; their derivative is zero.
struct AngularLogits {
    Matrix cosines;
    Matrix angles;
    Mask clamped;

    Eigen::Index batch() const { return cosines.rows(); }
    Eigen::Index classes() const { return cosines.cols(); }
};

inline Matrix normalize_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        if (!(norm >= kMinNorm))
            throw ZeroVector("row " + std::to_string(i) + " has norm below 1e-12");
        out.row(i) = m.row(i) / norm;
    }
    return out;
}

inline Matrix normalize_columns(const Matrix& m) {
    return normalize_rows(m.transpose()).transpose();
}

inline void validate_labels(const std::vector<int>& labels, Eigen::Index classes) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw DimensionMismatch("label " + std::to_string(labels[i]) + " at sample " +
                                    std::to_string(i) + " is not a class index below " +
                                    std::to_string(classes));
    }
}

inline double clamp_cosine(double c) {
    return std::clamp(c, -1.0 + kCosineClamp, 1.0 - kCosineClamp);
}

/// Cosine table of every feature row against every class column.
inline AngularLogits angular_logits(const EmbeddingBatch& batch, const ClassWeights& weights) {
    if (batch.dim() != weights.dim())
        throw DimensionMismatch("feature dim " + std::to_string(batch.dim()) +
                                " != weight dim " + std::to_string(weights.dim()));
    if (static_cast<Eigen::Index>(batch.labels.size()) != batch.size())
        throw DimensionMismatch("label count does not match batch size");
    validate_labels(batch.labels, weights.classes());

    AngularLogits out;
    const Matrix raw = batch.features * weights.weights;
    out.cosines.resize(raw.rows(), raw.cols());
    out.angles.resize(raw.rows(), raw.cols());
    out.clamped.resize(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
        for (Eigen::Index j = 0; j < raw.cols(); ++j) {
            const double c = clamp_cosine(raw(i, j));
            out.cosines(i, j) = c;
            out.angles(i, j) = std::acos(c);
            out.clamped(i, j) = c != raw(i, j);
        }
    }
    return out;
}

inline void check_angle(double theta) {
    if (!(theta >= -kAngleTolerance && theta <= kPi + kAngleTolerance))
        throw DomainError("angle " + std::to_string(theta) + " outside [0, pi]");
}

/// Sine difficulty metric sin(theta / 2): 0 at a class center, 1 antipodal.
inline double difficulty(double theta) {
    check_angle(theta);
    return std::sin(std::clamp(theta, 0.0, kPi) / 2.0);
}

}  // namespace adasin
