#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace tailbench {

using Rng = std::mt19937_64;

// splitmix64 (Steele, Lea, Flood 2014); one full avalanche round.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Per-replica seed derivation: seed_r = splitmix64(splitmix64(seed) ^ golden*(r+1)).
// Order-independent, so ensembles can be computed in any schedule.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ (0x9e3779b97f4a7c15ull * (index + 1)));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    // row-major fill so the draw order matches the row-by-row data layout
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

}  // namespace tailbench
