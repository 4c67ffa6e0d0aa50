#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace gsketch {

/// Seed + stream id addressing a reproducible Gaussian stream.
/// Equal (seed, stream) pairs give bit-identical draws on the same build;
/// distinct streams are decorrelated by a splitmix64 hash, so independent
/// trials can each own a stream and run in any order.
struct RandomSource {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    RandomSource with_stream(std::uint64_t s) const { return {seed, s}; }

    /// Child source i: fresh seed space derived from (seed, stream), so
    /// children of distinct parents never collide.
    RandomSource child(std::uint64_t i) const;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

inline RandomSource RandomSource::child(std::uint64_t i) const {
    std::uint64_t s = seed;
    std::uint64_t a = detail::splitmix64(s);
    s ^= stream * 0xda942042e4dd58b5ULL;
    std::uint64_t b = detail::splitmix64(s);
    return {a ^ b, i};
}

inline std::mt19937_64 make_engine(RandomSource src) {
    std::uint64_t s = src.seed;
    std::uint64_t a = detail::splitmix64(s);
    s ^= src.stream + 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = detail::splitmix64(s);
    return std::mt19937_64(a ^ (b * 0xff51afd7ed558ccdULL));
}

inline void fill_standard_normal(Eigen::Ref<Eigen::MatrixXd> m, RandomSource src) {
    auto eng = make_engine(src);
    std::normal_distribution<double> gauss(0.0, 1.0);
    // column-major fill so the draw order is part of the contract
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            m(i, j) = gauss(eng);
}

inline Eigen::MatrixXd standard_normal_matrix(Eigen::Index rows, Eigen::Index cols,
                                              RandomSource src) {
    Eigen::MatrixXd m(rows, cols);
    fill_standard_normal(m, src);
    return m;
}

} // namespace gsketch
