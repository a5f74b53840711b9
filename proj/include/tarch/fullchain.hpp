#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "tarch/error_dist.hpp"
#include "tarch/exceptions.hpp"
#include "tarch/model.hpp"
#include "tarch/parallel.hpp"
#include "tarch/rng.hpp"
#include "tarch/stats.hpp"

namespace tarch {

inline constexpr double kExplosionThreshold = 1e300;

struct PathRecord {
    std::vector<double> x0;
    std::vector<double> xi;     // xi_1 .. xi_n (shorter if the path exploded)
    std::vector<double> norms;  // |X_t| for the same t
    bool exploded = false;
    std::uint64_t explode_t = 0;
    std::uint64_t seed = 0;

    /// Lag vector X_t = (xi_t, ..., xi_{t-p+1}), reaching back into x0 for t < p.
    [[nodiscard]] std::vector<double> state(std::size_t t) const {
        const std::size_t p = x0.size();
        std::vector<double> x(p);
        for (std::size_t k = 0; k < p; ++k) {
            const auto idx = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(k);
            x[k] = idx >= 1 ? xi[static_cast<std::size_t>(idx - 1)] : x0[static_cast<std::size_t>(-idx)];
        }
        return x;
    }
};

namespace detail {

// One step of xi_t = a(X_{t-1}) + b(X_{t-1}) e_t, shifting the lag window in place.
inline double full_step_inplace(const ModelSpec& spec, std::span<double> x, double e) {
    const AB ab = eval_ab(spec, x);
    const double xi = ab.a + ab.b * e;
    for (std::size_t k = x.size() - 1; k > 0; --k) x[k] = x[k - 1];
    x[0] = xi;
    return xi;
}

inline double euclid(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

template <typename ErrorSource>
PathRecord simulate_impl(const ModelSpec& spec, std::span<const double> x0, std::uint64_t n, ErrorSource&& next_error) {
    if (x0.size() != spec.p()) throw DomainError("simulate: x0 must have length p");
    PathRecord rec;
    rec.x0.assign(x0.begin(), x0.end());
    rec.xi.reserve(n);
    rec.norms.reserve(n);
    std::vector<double> x(x0.begin(), x0.end());
    for (std::uint64_t t = 1; t <= n; ++t) {
        const double xi = full_step_inplace(spec, x, next_error());
        const double nrm = euclid(x);
        if (!std::isfinite(xi) || !(nrm <= kExplosionThreshold)) {
            rec.exploded = true;
            rec.explode_t = t;
            break;
        }
        rec.xi.push_back(xi);
        rec.norms.push_back(nrm);
    }
    return rec;
}

}  // namespace detail

/// Simulates the full chain for n steps from x0.
inline PathRecord simulate(const ModelSpec& spec, const ErrorDist& dist, std::span<const double> x0, std::uint64_t n,
                           RandomStream rs) {
    PathRecord rec = detail::simulate_impl(spec, x0, n, [&] { return dist.sample(rs); });
    rec.seed = rs.seed();
    return rec;
}

/// Simulates with a fixed error sequence; the path length is the number of errors.
inline PathRecord simulate_with_errors(const ModelSpec& spec, std::span<const double> x0, std::span<const double> errors) {
    std::size_t i = 0;
    return detail::simulate_impl(spec, x0, errors.size(), [&] { return errors[i++]; });
}

struct DriftRow {
    double radius = 0.0;
    std::uint64_t n = 0;
    double mean = 0.0;  // (1/n) mean log(|X_n| / |X_0|)
    double se = 0.0;
    // Same over the second half, log(|X_n| / |X_{n/2}|) / (n - n/2); free of the start-direction transient.
    double tail_mean = 0.0;
    double tail_se = 0.0;
    double max_over_directions = 0.0;
    std::size_t replicates = 0;
    std::size_t exploded = 0;
    std::size_t restarts = 0;
};

/**
 * Empirical drift (1/n) E log(|X_n| / |X_0|) from |X_0| = radius, with a fresh
 * uniform direction per replicate. Replicate k of radius i runs on
 * stream.split(i).split(k), so adding n values does not move the paths.
 * An exploded path contributes its growth up to the explosion step.
 */
inline std::vector<DriftRow> empirical_drift(const ModelSpec& spec, const ErrorDist& dist,
                                             const std::vector<double>& radii, const std::vector<std::uint64_t>& ns,
                                             std::size_t replicates, const RandomStream& stream, unsigned threads = 1) {
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw DomainError("empirical_drift: radii must be increasing");
    if (ns.empty()) throw DomainError("empirical_drift: need at least one n");
    const std::uint64_t n_max = *std::max_element(ns.begin(), ns.end());
    const std::size_t p = spec.p();
    struct PathOut {
        std::vector<double> log_ratio;  // per entry of ns
        std::vector<double> tail_ratio;
        bool exploded = false;
        std::size_t restarts = 0;
    };
    std::vector<DriftRow> rows;
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        const double radius = radii[ri];
        const RandomStream rstream = stream.split(static_cast<std::uint64_t>(ri));
        const auto paths = parallel_map(replicates, threads, [&](std::size_t k) {
            RandomStream rs = rstream.split(static_cast<std::uint64_t>(k));
            PathOut out;
            out.log_ratio.assign(ns.size(), 0.0);
            out.tail_ratio.assign(ns.size(), 0.0);
            std::vector<double> log_half(ns.size(), 0.0);
            for (;;) {
                std::vector<double> x = rs.sphere_point(p);
                for (auto& v : x) v *= radius;
                const double log_r0 = std::log(detail::euclid(x));
                std::fill(log_half.begin(), log_half.end(), log_r0);
                bool zero_hit = false;
                double last_log = log_r0;
                std::uint64_t t = 1;
                for (; t <= n_max; ++t) {
                    detail::full_step_inplace(spec, x, dist.sample(rs));
                    const double nrm = detail::euclid(x);
                    if (nrm == 0.0) {
                        zero_hit = true;
                        break;
                    }
                    if (!(nrm <= kExplosionThreshold)) {
                        out.exploded = true;
                        break;
                    }
                    last_log = std::log(nrm);
                    for (std::size_t j = 0; j < ns.size(); ++j) {
                        if (ns[j] / 2 == t) log_half[j] = last_log;
                        if (ns[j] == t) {
                            out.log_ratio[j] = (last_log - log_r0) / static_cast<double>(t);
                            out.tail_ratio[j] = (last_log - log_half[j]) / static_cast<double>(t - t / 2);
                        }
                    }
                }
                if (zero_hit) {
                    ++out.restarts;
                    continue;
                }
                if (out.exploded) {
                    const double rate = (last_log - log_r0) / static_cast<double>(t - 1 > 0 ? t - 1 : 1);
                    for (std::size_t j = 0; j < ns.size(); ++j)
                        if (ns[j] >= t) out.log_ratio[j] = out.tail_ratio[j] = rate;
                }
                return out;
            }
        });
        for (std::size_t j = 0; j < ns.size(); ++j) {
            DriftRow row;
            row.radius = radius;
            row.n = ns[j];
            row.replicates = replicates;
            std::vector<double> vals, tails;
            vals.reserve(replicates);
            tails.reserve(replicates);
            row.max_over_directions = -std::numeric_limits<double>::infinity();
            for (const auto& po : paths) {
                vals.push_back(po.log_ratio[j]);
                tails.push_back(po.tail_ratio[j]);
                row.max_over_directions = std::max(row.max_over_directions, po.log_ratio[j]);
                row.exploded += po.exploded ? 1 : 0;
                row.restarts += po.restarts;
            }
            const auto me = stats::mean_stderr(vals);
            row.mean = me.mean;
            row.se = me.se;
            const auto tm = stats::mean_stderr(tails);
            row.tail_mean = tm.mean;
            row.tail_se = tm.se;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace tarch
