#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "adasin/errors.hpp"
#include "adasin/geometry.hpp"

namespace adasin {

/// Curriculum scalar shared by CurricularFace and the AdaSin family.
/// `t` starts at zero; `k` counts applied batch updates.
struct AdaptiveState {
    double t = 0.0;
    std::uint64_t k = 0;
};

/// One EMA step, weighted exactly as t_k = alpha * r_k + (1 - alpha) * t_{k-1}
/// with r_k the batch mean positive cosine. The conventional history-weighted
/// EMA is the same update with alpha replaced by 1 - alpha.
inline AdaptiveState update_t(const AdaptiveState& state,
                              std::span<const double> batch_positive_cosines, double alpha) {
    if (batch_positive_cosines.empty()) throw EmptyBatch("update_t needs at least one cosine");
    double sum = 0.0;
    for (double c : batch_positive_cosines) {
        if (!(c >= -1.0 && c <= 1.0))
            throw DomainError("positive cosine " + std::to_string(c) + " outside [-1, 1]");
        sum += c;
    }
    const double r = sum / static_cast<double>(batch_positive_cosines.size());
    return {alpha * r + (1.0 - alpha) * state.t, state.k + 1};
}

/// Phi = t + h * sin(theta_pos / 2).
inline double modulation_coefficient(double t, double theta_pos, double h) {
    return t + h * difficulty(theta_pos);
}

struct PhiBounds {
    double lower;
    double upper;
};

/// Range of Phi after k EMA steps given the per-batch boundary angles
/// theta_c (the smallest positive angle in each batch, capped at pi/2).
///   lower = -alpha * sum_j (1-alpha)^(k-j) + h * sin(theta_c[k] / 2)
///   upper =  alpha * sum_j (1-alpha)^(k-j) * cos(theta_c[j]) + h
inline PhiBounds phi_bounds(std::span<const double> boundary_angles, double alpha, double h,
                            std::size_t k) {
    if (boundary_angles.empty() || k == 0) throw EmptyHistory("phi_bounds needs k >= 1 batches");
    if (k > boundary_angles.size())
        throw EmptyHistory("k = " + std::to_string(k) + " exceeds history length " +
                           std::to_string(boundary_angles.size()));
    double weight_sum = 0.0;
    double cosine_sum = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
        const double theta_c = boundary_angles[j - 1];
        if (!(theta_c > 0.0 && theta_c <= kPi / 2 + kAngleTolerance))
            throw DomainError("boundary angle " + std::to_string(theta_c) + " outside (0, pi/2]");
        const double w = std::pow(1.0 - alpha, static_cast<double>(k - j));
        weight_sum += w;
        cosine_sum += w * std::cos(theta_c);
    }
    const double theta_k = boundary_angles[k - 1];
    return {-alpha * weight_sum + h * std::sin(theta_k / 2.0), alpha * cosine_sum + h};
}

}  // namespace adasin
