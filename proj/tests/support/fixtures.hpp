#pragma once

#include <cmath>
#include <vector>

#include "adasin/geometry.hpp"
#include "adasin/losses.hpp"
#include "adasin/random.hpp"
#include "scalar_oracle.hpp"

namespace fixtures {

using namespace adasin;

struct Instance {
    EmbeddingBatch batch;
    ClassWeights weights;
};

inline oracle::Rows rows_of(const Matrix& m) {
    oracle::Rows out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index q = 0; q < m.cols(); ++q) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(q)] = m(i, q);
    return out;
}

inline oracle::Rows features_of(const Instance& inst) { return rows_of(inst.batch.features); }
inline oracle::Rows centers_of(const Instance& inst) { return rows_of(inst.weights.weights.transpose()); }

/// Each sample is its class center plus Gaussian noise of the given spread.
inline Instance noisy_instance(int B, int n, int d, double spread, Rng& rng) {
    Instance inst;
    inst.weights.weights = normalize_columns(gaussian_matrix(d, n, rng));
    Matrix x(B, d);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < B; ++i) {
        const int y = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        inst.batch.labels.push_back(y);
        for (int q = 0; q < d; ++q) x(i, q) = inst.weights.weights(q, y) + spread * normal(rng);
    }
    inst.batch.features = normalize_rows(x);
    return inst;
}

/// Instance in which every sample is easy under the additive margin m.
inline Instance all_easy_instance(int B, int n, int d, double m, Rng& rng) {
    for (;;) {
        Instance inst = noisy_instance(B, n, d, 0.02, rng);
        const AngularLogits l = angular_logits(inst.batch, inst.weights);
        const HardSplit split = classify_hard(l, inst.batch.labels, m);
        if (!split.hard.any() && !l.clamped.any()) return inst;
    }
}

/// Every sample sits at exactly `theta` from its own center, tilted toward a
/// negative center, and is hard under the additive margin m.
inline Instance equal_angle_hard_instance(int B, int n, int d, double theta, double m, Rng& rng) {
    for (;;) {
        Instance inst;
        inst.weights.weights = normalize_columns(gaussian_matrix(d, n, rng));
        inst.batch.features.resize(B, d);
        for (int i = 0; i < B; ++i) {
            const int y = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
            const int j = (y + 1) % n;
            const Vector wy = inst.weights.weights.col(y);
            Vector u = inst.weights.weights.col(j) - wy * wy.dot(inst.weights.weights.col(j));
            u.normalize();
            inst.batch.features.row(i) = (std::cos(theta) * wy + std::sin(theta) * u).transpose();
            inst.batch.labels.push_back(y);
        }
        const AngularLogits l = angular_logits(inst.batch, inst.weights);
        const HardSplit split = classify_hard(l, inst.batch.labels, m);
        bool all_hard = !l.clamped.any();
        for (char h : split.pos_hard) all_hard = all_hard && h;
        if (all_hard) return inst;
    }
}

}  // namespace fixtures
