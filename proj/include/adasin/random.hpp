#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "adasin/geometry.hpp"

namespace adasin {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent sub-seed for a named stream (data, model, pairs, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char ch : stream) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ull;
    }
    return splitmix64(splitmix64(seed ^ h) + index);
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                              double stddev = 1.0) {
    std::normal_distribution<double> normal(0.0, stddev);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

}  // namespace adasin
