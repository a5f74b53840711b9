#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "tarch/exceptions.hpp"

namespace tarch {

using SpherePoints = std::vector<std::vector<double>>;

namespace detail {

inline constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                       43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

inline double radical_inverse(std::size_t i, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

inline double std_normal_quantile(double u) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u); }

}  // namespace detail

/// The i-th point (i >= 0) of the deterministic low-discrepancy sequence on the unit sphere in R^p.
inline std::vector<double> sphere_sequence_point(std::size_t p, std::size_t i, std::size_t n_hint = 0) {
    if (p == 0) throw DomainError("sphere point: p must be positive");
    if (p == 1) return {i % 2 == 0 ? -1.0 : 1.0};
    if (p == 2) {
        // Evenly spaced when the total is known; otherwise the van der Corput sequence on the circle.
        const double frac = n_hint > 0 ? (static_cast<double>(i % n_hint) + 0.5) / static_cast<double>(n_hint)
                                       : detail::radical_inverse(i + 1, 2);
        const double a = 2.0 * std::numbers::pi * frac;
        return {std::cos(a), std::sin(a)};
    }
    if (p > std::size(detail::kPrimes)) throw DomainError("sphere point: p too large for the Halton sequence");
    std::vector<double> x(p);
    double n2 = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
        x[k] = detail::std_normal_quantile(detail::radical_inverse(i + 1, detail::kPrimes[k]));
        n2 += x[k] * x[k];
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& v : x) v *= inv;
    return x;
}

/// n points of the sequence; for p = 1 the grid is always {-1, +1}.
inline SpherePoints sphere_grid(std::size_t p, std::size_t n) {
    if (p == 1) return {{-1.0}, {1.0}};
    SpherePoints out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sphere_sequence_point(p, i, n));
    return out;
}

/**
 * n sequence points that avoid a band around the given planes (each plane is
 * a normal vector) and, if requested, around the axial planes {x_i = 0}.
 */
inline SpherePoints sphere_grid_excluding(std::size_t p, std::size_t n, double band,
                                          const std::vector<std::vector<double>>& planes, bool exclude_axial) {
    if (p == 1) return {{-1.0}, {1.0}};
    auto keep = [&](const std::vector<double>& x) {
        if (exclude_axial)
            for (double v : x)
                if (std::abs(v) < band) return false;
        for (const auto& h : planes) {
            double dot = 0.0, hn = 0.0;
            for (std::size_t k = 0; k < p; ++k) {
                dot += h[k] * x[k];
                hn += h[k] * h[k];
            }
            if (std::abs(dot) < band * std::sqrt(hn)) return false;
        }
        return true;
    };
    SpherePoints out;
    out.reserve(n);
    const std::size_t max_draw = 50 * n + 1000;
    for (std::size_t i = 0; i < max_draw && out.size() < n; ++i) {
        auto x = sphere_sequence_point(p, i);
        if (keep(x)) out.push_back(std::move(x));
    }
    if (out.size() < n) throw DomainError("sphere grid: exclusion band too wide for the requested size");
    return out;
}

/// Index of the grid point closest to x (largest inner product on the sphere).
inline std::size_t nearest_grid_index(const SpherePoints& grid, const std::vector<double>& x) {
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double dot = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) dot += grid[g][k] * x[k];
        if (dot > best_dot) {
            best_dot = dot;
            best = g;
        }
    }
    return best;
}

}  // namespace tarch
