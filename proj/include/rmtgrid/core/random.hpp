#pragma once

#include <cstdint>
#include <random>

#include "rmtgrid/core/linalg.hpp"

namespace rmtgrid {

/// SplitMix64 finaliser; used to derive independent stream seeds from one
/// user seed so that no generator state is ever shared between calls.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Per-call random stream. Cheap to construct; never shared across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    double gaussian() { return normal_(engine_); }
    double gaussian(double sd) { return sd * normal_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    /// +1 or -1 with equal probability.
    double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }
    std::uint64_t next() { return engine_(); }

    RealMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
        RealMatrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sd * normal_(engine_);
        return m;
    }

    /// Entries with independent real and imaginary parts, each N(0, var/2).
    ComplexMatrix complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double var = 1.0) {
        const double sd = std::sqrt(var / 2.0);
        ComplexMatrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) {
                const double re = sd * normal_(engine_);
                const double im = sd * normal_(engine_);
                m(i, j) = cplx(re, im);
            }
        return m;
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace rmtgrid
