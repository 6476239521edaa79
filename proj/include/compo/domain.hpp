#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "compo/errors.hpp"
#include "compo/rng.hpp"

namespace compo {

/// Axis-aligned box, the domain of every target and error estimate.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    Box() = default;
    Box(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size()) throw ConfigError("Box: lower/upper dimension mismatch");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] < hi[i])) throw ConfigError("Box: requires lo < hi in every coordinate");
    }

    /// The cube [lo, hi]^d.
    static Box cube(std::size_t dim, double lo, double hi) {
        return Box(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
    }

    std::size_t dim() const { return lo.size(); }

    bool contains(std::span<const double> x, double tol = 0.0) const {
        if (x.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i)
            if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
        return true;
    }
};

/// Regular grid over a box with `per_dim` points per coordinate (endpoints
/// included), flattened row-major into a point list.
std::vector<std::vector<double>> grid_points(const Box& box, std::size_t per_dim);

/// `count` low-discrepancy points inside the box.
std::vector<std::vector<double>> quasirandom_points(const Box& box, std::size_t count,
                                                    std::uint64_t seed = 0);

/// `count` seeded uniform points inside the box.
std::vector<std::vector<double>> random_points(const Box& box, std::size_t count, Rng& rng);

inline std::vector<std::vector<double>> grid_points(const Box& box, std::size_t per_dim) {
    const std::size_t d = box.dim();
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i) total *= per_dim;
    std::vector<std::vector<double>> pts;
    pts.reserve(total);
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    for (std::size_t k = 0; k < total; ++k) {
        for (std::size_t i = 0; i < d; ++i) {
            double t = per_dim == 1 ? 0.5 : static_cast<double>(idx[i]) / (per_dim - 1);
            x[i] = box.lo[i] + t * (box.hi[i] - box.lo[i]);
        }
        pts.push_back(x);
        for (std::size_t i = d; i-- > 0;) {
            if (++idx[i] < per_dim) break;
            idx[i] = 0;
        }
    }
    return pts;
}

inline std::vector<std::vector<double>> quasirandom_points(const Box& box, std::size_t count,
                                                           std::uint64_t seed) {
    QuasiRandom qr(box.dim(), seed);
    std::vector<std::vector<double>> pts;
    pts.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto& u = qr.next();
        std::vector<double> x(box.dim());
        for (std::size_t i = 0; i < box.dim(); ++i) x[i] = box.lo[i] + u[i] * (box.hi[i] - box.lo[i]);
        pts.push_back(std::move(x));
    }
    return pts;
}

inline std::vector<std::vector<double>> random_points(const Box& box, std::size_t count, Rng& rng) {
    std::vector<std::vector<double>> pts;
    pts.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> x(box.dim());
        for (std::size_t i = 0; i < box.dim(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
        pts.push_back(std::move(x));
    }
    return pts;
}

} // namespace compo
