#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace compo {

/// Seeded random source. Wraps mt19937_64 and derives doubles with fixed
/// bit arithmetic so that streams are identical across standard libraries
/// (std::uniform_real_distribution is implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on [0, 1) with 53-bit resolution.
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return eng_() % n; }

    std::uint64_t raw() { return eng_(); }

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

private:
    std::mt19937_64 eng_;
};

/// Deterministic low-discrepancy points in [0,1)^d (additive recurrence with
/// the generalized golden ratio). `seed` offsets the start index.
class QuasiRandom {
public:
    QuasiRandom(std::size_t dim, std::uint64_t seed = 0) : alpha_(dim), state_(dim, 0.5) {
        // phi_d is the unique positive root of x^(d+1) = x + 1
        double phi = 2.0;
        for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
        double a = 1.0;
        for (std::size_t j = 0; j < dim; ++j) {
            a /= phi;
            alpha_[j] = a;
        }
        for (std::uint64_t k = 0; k < seed % 9973; ++k) advance();
    }

    /// Next point; coordinates in [0,1).
    const std::vector<double>& next() {
        advance();
        return state_;
    }

private:
    void advance() {
        for (std::size_t j = 0; j < alpha_.size(); ++j) {
            state_[j] += alpha_[j];
            state_[j] -= std::floor(state_[j]);
        }
    }

    std::vector<double> alpha_;
    std::vector<double> state_;
};

} // namespace compo
