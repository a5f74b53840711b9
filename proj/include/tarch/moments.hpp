#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "tarch/collapsed.hpp"
#include "tarch/error_dist.hpp"
#include "tarch/exceptions.hpp"
#include "tarch/model.hpp"
#include "tarch/parallel.hpp"
#include "tarch/rng.hpp"
#include "tarch/sphere_grid.hpp"
#include "tarch/stats.hpp"

namespace tarch {

// ---------------------------------------------------------------------------
// Particle estimator of log E(prod_{t<=n} (delta + w_t)^r | theta_0)

/**
 * Per-step log mean incremental weight of a resampling particle system.
 *
 * Particles evolve under the collapsed chain; at step t each is weighted by
 * (delta + w_t)^r and the population is resampled systematically. The running
 * sum of the returned increments is the log of an unbiased estimate of
 * E(prod (delta + w)^r). Plain Monte Carlo on the product is useless here: the
 * log-product has a spread of many units by n = 40.
 *
 * The stream is consumed in a fixed order (N errors then one resampling
 * uniform per step), so two calls with copies of the same stream share their
 * random numbers even when theta0 or r differ.
 */
inline std::vector<double> particle_log_increments(const ModelSpec& spec, const ErrorDist& dist,
                                                   std::span<const double> theta0, double r, double delta,
                                                   std::size_t n_steps, std::size_t n_particles, RandomStream rs) {
    const std::size_t p = spec.p();
    const std::size_t N = n_particles;
    std::vector<double> cur(N * p), next(N * p), lw(N), cdf(N);
    for (std::size_t i = 0; i < N; ++i) std::copy(theta0.begin(), theta0.end(), cur.begin() + i * p);
    std::vector<double> inc;
    inc.reserve(n_steps);
    const double logN = std::log(static_cast<double>(N));
    for (std::size_t t = 0; t < n_steps; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < N; ++i) {
            std::span<double> th(cur.data() + i * p, p);
            const double u = dist.sample(rs);
            const double w = collapsed_step_inplace(spec, th, u);
            const double base = delta + w;
            lw[i] = base > 0.0 ? r * std::log(base) : -std::numeric_limits<double>::infinity();
            mx = std::max(mx, lw[i]);
        }
        const double ures = rs.uniform();
        if (!std::isfinite(mx)) {
            inc.push_back(mx);
            break;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            s += std::exp(lw[i] - mx);
            cdf[i] = s;
        }
        inc.push_back(mx + std::log(s) - logN);
        // Systematic resampling.
        const double step = s / static_cast<double>(N);
        double pos = ures * step;
        std::size_t j = 0;
        for (std::size_t i = 0; i < N; ++i) {
            while (j + 1 < N && cdf[j] < pos) ++j;
            std::copy(cur.begin() + j * p, cur.begin() + (j + 1) * p, next.begin() + i * p);
            pos += step;
        }
        cur.swap(next);
    }
    return inc;
}

// ---------------------------------------------------------------------------
// Growth rate of the r-th moment

enum class MomentVerdict { finite, infinite, inconclusive };

inline const char* moment_verdict_name(MomentVerdict v) {
    switch (v) {
        case MomentVerdict::finite: return "finite-r-moment";
        case MomentVerdict::infinite: return "infinite-r-moment";
        case MomentVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct GrowthOptions {
    std::size_t n_max = 40;
    std::size_t groups = 8;         // independent particle systems, for the standard error
    std::size_t particles = 500;    // per group
    std::size_t grid_points = 256;  // sphere grid part of the start set
    std::size_t stationary_starts = 64;
    double delta = 0.0;
    unsigned threads = 1;
};

struct MomentGrowth {
    double r = 0.0;
    double delta = 0.0;
    std::vector<double> log_moment;  // n = 1..n_max: max over starts of log E(prod w^r)
    std::vector<double> g_n;         // exp(log_moment / n)
    double log_g_hat = 0.0;
    double log_g_se = 0.0;
    double g_hat = 0.0;
    double se = 0.0;
    MomentVerdict verdict = MomentVerdict::inconclusive;
    std::size_t n_starts = 0;
    std::size_t particles = 0;
    std::size_t groups = 0;
    bool overflow = false;
};

/// Starts approximating the sup over the sphere: a grid off thresholds and axes, plus stationary draws.
inline SpherePoints growth_start_set(const ModelSpec& spec, const ErrorDist& dist, std::size_t grid_points,
                                     std::size_t stationary_starts, const RandomStream& stream) {
    if (spec.p() == 1) return sphere_grid(1, 2);
    SpherePoints starts = sphere_grid_excluding(spec.p(), grid_points, 1e-6, spec.hyperplanes(), true);
    if (stationary_starts > 0) {
        CollapsedChain chain(spec, dist, stream.split("stationary"));
        for (int t = 0; t < 10000; ++t) chain.advance();
        for (std::size_t k = 0; k < stationary_starts; ++k) {
            for (int t = 0; t < 50; ++t) chain.advance();
            starts.push_back(chain.theta());
        }
    }
    return starts;
}

namespace detail {

// Least-squares slope of y over the index window [lo, hi) with x = index + 1.
inline double tail_slope(const std::vector<double>& y, std::size_t lo, std::size_t hi) {
    std::vector<double> xs, ys;
    for (std::size_t i = lo; i < hi; ++i) {
        xs.push_back(static_cast<double>(i + 1));
        ys.push_back(y[i]);
    }
    return stats::fit_line(xs, ys).slope;
}

inline double log_mean_exp(std::span<const double> xs) {
    return stats::log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

}  // namespace detail

/**
 * Growth rate g of E(prod_{t<=n} w^r) over the start set.
 *
 * For every start, G particle systems run on streams shared by all starts.
 * The pooled curve combines the G systems' incremental weights step by step;
 * log g-hat is the least-squares slope of the max-over-starts pooled curve on
 * n in [n_max/2, n_max]. The same slope on each system alone gives G
 * replicates, and their spread gives the standard error.
 */
inline MomentGrowth growth_rate(const ModelSpec& spec, const ErrorDist& dist, double r, const GrowthOptions& opt,
                                const RandomStream& stream, const SpherePoints* start_override = nullptr) {
    require_moment(dist, r);
    if (opt.n_max < 4) throw DomainError("growth_rate: n_max too small");
    if (opt.groups < 2) throw DomainError("growth_rate: need at least 2 groups");
    const SpherePoints starts =
        start_override ? *start_override : growth_start_set(spec, dist, opt.grid_points, opt.stationary_starts, stream);
    const std::size_t S = starts.size(), G = opt.groups, n = opt.n_max;
    const RandomStream pstream = stream.split("particles");
    auto curves = parallel_map(S * G, opt.threads, [&](std::size_t k) {
        const std::size_t s = k / G, g = k % G;
        return particle_log_increments(spec, dist, starts[s], r, opt.delta, n, opt.particles,
                                       pstream.split(static_cast<std::uint64_t>(g)));
    });
    MomentGrowth out;
    out.r = r;
    out.delta = opt.delta;
    out.n_starts = S;
    out.particles = opt.particles;
    out.groups = G;
    for (auto& c : curves) {
        if (c.size() < n || std::any_of(c.begin(), c.end(), [](double v) { return !std::isfinite(v); })) {
            out.overflow = true;
            c.resize(n, kLogFloor);
            for (auto& v : c)
                if (!std::isfinite(v)) v = kLogFloor;
        }
    }
    // Cumulative curves: pooled per start, and per (start, group).
    std::vector<double> pooled_max(n, -std::numeric_limits<double>::infinity());
    std::vector<std::vector<double>> group_max(G, std::vector<double>(n, -std::numeric_limits<double>::infinity()));
    std::vector<double> incs(G);
    for (std::size_t s = 0; s < S; ++s) {
        double cum = 0.0;
        std::vector<double> gcum(G, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t g = 0; g < G; ++g) {
                incs[g] = curves[s * G + g][t];
                gcum[g] += incs[g];
                group_max[g][t] = std::max(group_max[g][t], gcum[g]);
            }
            cum += detail::log_mean_exp(incs);
            pooled_max[t] = std::max(pooled_max[t], cum);
        }
    }
    out.log_moment = pooled_max;
    for (std::size_t t = 0; t < n; ++t) out.g_n.push_back(std::exp(pooled_max[t] / static_cast<double>(t + 1)));
    const std::size_t lo = n / 2 - 1;  // n = n_max/2 .. n_max
    out.log_g_hat = detail::tail_slope(pooled_max, lo, n);
    std::vector<double> slopes;
    for (std::size_t g = 0; g < G; ++g) slopes.push_back(detail::tail_slope(group_max[g], lo, n));
    out.log_g_se = stats::mean_stderr(slopes).se;
    out.g_hat = std::exp(out.log_g_hat);
    out.se = out.g_hat * out.log_g_se;
    if (out.overflow)
        out.verdict = MomentVerdict::inconclusive;
    else if (out.g_hat + 3.0 * out.se < 1.0)
        out.verdict = MomentVerdict::finite;
    else if (out.g_hat - 3.0 * out.se > 1.0)
        out.verdict = MomentVerdict::infinite;
    return out;
}

// ---------------------------------------------------------------------------
// Test function lambda and the drift condition

/// Grid-tabulated positive function on the sphere, nearest-grid-point lookup.
struct LambdaTable {
    double r = 0.0;
    std::size_t n = 1;
    double delta = 0.0;
    SpherePoints grid;
    std::vector<double> values;
    double k6 = 0.0;           // max over grid of E((delta + w)^r)
    double lower_bound = 0.0;  // (delta^r)^((n-1)/2)
    double upper_bound = 0.0;  // k6^((n-1)/2)
    std::size_t bound_violations = 0;

    [[nodiscard]] double operator()(std::span<const double> theta) const {
        if (values.size() == 1) return values.front();
        return values[nearest_grid_index(grid, std::vector<double>(theta.begin(), theta.end()))];
    }
};

/**
 * lambda(theta) = prod_{t=1}^{n-1} q_t(theta)^{1/n}, q_t = E((delta+w_1)^r ... (delta+w_t)^r | theta),
 * with q_t from the particle estimator (common random numbers across grid points).
 */
inline LambdaTable build_lambda(const ModelSpec& spec, const ErrorDist& dist, double r, std::size_t n, double delta,
                                const SpherePoints& grid, std::size_t particles, const RandomStream& stream,
                                unsigned threads = 1) {
    require_moment(dist, r);
    if (n == 0) throw DomainError("build_lambda: n must be at least 1");
    if (!(delta > 0.0)) throw DomainError("build_lambda: delta must be positive");
    LambdaTable lt;
    lt.r = r;
    lt.n = n;
    lt.delta = delta;
    lt.grid = grid;
    const std::size_t steps = std::max<std::size_t>(n - 1, 1);
    const RandomStream ps = stream.split("lambda");
    const auto incs = parallel_map(grid.size(), threads, [&](std::size_t g) {
        return particle_log_increments(spec, dist, grid[g], r, delta, steps, particles, ps);
    });
    std::vector<double> log_lambda(grid.size(), 0.0);
    double log_k6 = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        log_k6 = std::max(log_k6, incs[g].front());
        double cum = 0.0;
        for (std::size_t t = 0; t + 1 < n; ++t) {
            cum += incs[g][t];  // log q_{t+1}
            log_lambda[g] += cum / static_cast<double>(n);
        }
    }
    lt.k6 = std::exp(log_k6);
    const double half = 0.5 * static_cast<double>(n - 1);
    lt.lower_bound = std::exp(half * r * std::log(delta));
    lt.upper_bound = std::exp(half * log_k6);
    for (double ll : log_lambda) {
        const double v = std::exp(ll);
        lt.values.push_back(v);
        if (v < lt.lower_bound * (1.0 - 1e-9) || v > lt.upper_bound * (1.0 + 1e-9)) ++lt.bound_violations;
    }
    return lt;
}

struct LambdaChoice {
    bool found = false;
    std::size_t n = 0;
    double delta = 0.0;
    double inflated_rate = 0.0;  // max over grid of (E prod (delta + w)^r)^{1/n}
    std::size_t halvings = 0;
    std::string reason;
};

/**
 * Picks n as the smallest tabulated n with g_n < 1, then delta by starting at
 * 0.01 * median(w) and halving until the delta-inflated rate at n is below 1.
 */
inline LambdaChoice choose_lambda_parameters(const ModelSpec& spec, const ErrorDist& dist, const MomentGrowth& growth,
                                             const SpherePoints& grid, std::size_t particles,
                                             const RandomStream& stream, unsigned threads = 1) {
    LambdaChoice ch;
    for (std::size_t t = 0; t < growth.g_n.size(); ++t)
        if (growth.g_n[t] < 1.0) {
            ch.n = t + 1;
            break;
        }
    if (ch.n == 0) {
        ch.reason = "no tabulated n has g_n < 1";
        return ch;
    }
    CollapsedChain chain(spec, dist, stream.split("median"));
    for (int t = 0; t < 10000; ++t) chain.advance();
    std::vector<double> ws(10000);
    for (auto& w : ws) w = chain.advance().w;
    std::nth_element(ws.begin(), ws.begin() + ws.size() / 2, ws.end());
    double delta = 0.01 * ws[ws.size() / 2];
    const RandomStream ps = stream.split("inflated");
    for (std::size_t h = 0; h <= 20; ++h) {
        const auto rates = parallel_map(grid.size(), threads, [&](std::size_t g) {
            const auto inc = particle_log_increments(spec, dist, grid[g], growth.r, delta, ch.n, particles, ps);
            double cum = 0.0;
            for (double v : inc) cum += v;
            return cum / static_cast<double>(ch.n);
        });
        ch.inflated_rate = std::exp(*std::max_element(rates.begin(), rates.end()));
        ch.delta = delta;
        ch.halvings = h;
        if (ch.inflated_rate < 1.0) {
            ch.found = true;
            return ch;
        }
        delta *= 0.5;
    }
    ch.reason = "inflated rate stayed >= 1 after 20 halvings of delta";
    return ch;
}

enum class DriftVerdict { holds, fails, inconclusive };

inline const char* drift_verdict_name(DriftVerdict v) {
    switch (v) {
        case DriftVerdict::holds: return "holds";
        case DriftVerdict::fails: return "fails";
        case DriftVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct DriftProbe {
    std::vector<double> theta;
    double mean = 0.0;
    double se = 0.0;
};

struct DriftReport {
    std::vector<DriftProbe> rows;
    double max_mean = -INFINITY;
    double min_mean = INFINITY;
    double max_upper = -INFINITY;  // max over probes of mean + 3 se
    DriftVerdict verdict = DriftVerdict::inconclusive;
};

using SphereFunction = std::function<double(std::span<const double>)>;

/// Monte Carlo estimate of E(lambda(theta_1)/lambda(theta) w(theta, e_1)^r) at every probe.
inline DriftReport check_drift_3_6(const ModelSpec& spec, const ErrorDist& dist, double r, const SphereFunction& lambda,
                                   const SpherePoints& probes, std::size_t inner_samples, const RandomStream& stream,
                                   unsigned threads = 1) {
    require_moment(dist, r);
    DriftReport rep;
    // Every probe sees the same errors, so differences between probes are sharper than the raw se.
    const RandomStream es = stream.split("drift36");
    rep.rows = parallel_map(probes.size(), threads, [&](std::size_t i) {
        RandomStream rs = es;
        const double l0 = lambda(probes[i]);
        std::vector<double> vals(inner_samples);
        std::vector<double> th;
        for (auto& v : vals) {
            th = probes[i];
            const double w = collapsed_step_inplace(spec, th, dist.sample(rs));
            v = w == 0.0 ? 0.0 : lambda(th) / l0 * std::pow(w, r);
        }
        const auto me = stats::mean_stderr(vals);
        return DriftProbe{probes[i], me.mean, me.se};
    });
    bool any_above = false;
    for (const auto& row : rep.rows) {
        rep.max_mean = std::max(rep.max_mean, row.mean);
        rep.min_mean = std::min(rep.min_mean, row.mean);
        rep.max_upper = std::max(rep.max_upper, row.mean + 3.0 * row.se);
        if (row.mean - 3.0 * row.se > 1.0) any_above = true;
    }
    rep.verdict = rep.max_upper < 1.0 ? DriftVerdict::holds : (any_above ? DriftVerdict::fails : DriftVerdict::inconclusive);
    return rep;
}

// ---------------------------------------------------------------------------
// Kesten index

struct KappaIteration {
    double r = 0.0;
    double g_hat = 0.0;
    double se = 0.0;
};

struct KappaSolution {
    bool converged = false;
    double kappa = 0.0;
    double g_at_kappa = 0.0;
    double bracket_lo = 0.0, bracket_hi = 0.0;
    double tol = 0.0;
    std::vector<KappaIteration> iterations;  // in evaluation order
    std::vector<std::string> monotonicity_flags;
    double log_rho = 0.0;
    double log_rho_se = 0.0;
};

/**
 * Solves g-hat(kappa) = 1 by bracketed root finding on log g-hat(r). Every
 * evaluation reuses the same streams, so r -> g-hat(r) is a smooth function of
 * r rather than a freshly noisy one.
 */
inline KappaSolution solve_kappa(const ModelSpec& spec, const ErrorDist& dist, double lo, double hi, double tol,
                                 const GrowthOptions& growth, const RandomStream& stream,
                                 std::uint64_t lyap_steps = 200000) {
    if (!(lo > 0.0) || !(hi > lo)) throw DomainError("solve_kappa: bracket must satisfy 0 < lo < hi");
    KappaSolution sol;
    sol.bracket_lo = lo;
    sol.bracket_hi = hi;
    sol.tol = tol;
    LyapOptions lo_opt;
    lo_opt.n_steps = lyap_steps;
    lo_opt.burn_in = 10000;
    const LyapEstimate ly = estimate_lyapunov(spec, dist, lo_opt, stream.split("lyapunov"));
    sol.log_rho = ly.mean_logw;
    sol.log_rho_se = ly.se;
    if (!(ly.mean_logw + 3.0 * ly.se < 0.0)) {
        std::ostringstream os;
        os << "solve_kappa: requires log rho < 0, estimated " << ly.mean_logw << " +- " << ly.se;
        throw PreconditionError(os.str());
    }
    const SpherePoints starts = growth_start_set(spec, dist, growth.grid_points, growth.stationary_starts, stream);
    const RandomStream gs = stream.split("growth");
    auto eval = [&](double r) {
        const MomentGrowth m = growth_rate(spec, dist, r, growth, gs, &starts);
        sol.iterations.push_back({r, m.g_hat, m.se});
        return m.log_g_hat;
    };
    const double flo = eval(lo), fhi = eval(hi);
    if (!(flo < 0.0 && fhi > 0.0)) {
        std::ostringstream os;
        os << "solve_kappa: bracket does not straddle 1: g(" << lo << ") = " << std::exp(flo) << ", g(" << hi
           << ") = " << std::exp(fhi);
        throw BracketError(os.str());
    }
    std::uintmax_t max_iter = 40;
    auto term = [&](double a, double b) { return std::abs(b - a) < 1e-4; };
    const auto root = boost::math::tools::toms748_solve(eval, lo, hi, flo, fhi, term, max_iter);
    sol.kappa = 0.5 * (root.first + root.second);
    const double f = eval(sol.kappa);
    sol.g_at_kappa = std::exp(f);
    sol.converged = std::abs(sol.g_at_kappa - 1.0) <= tol;
    // ghat is only expected to be monotone where it exceeds its minimum; report decreases beyond noise.
    auto sorted = sol.iterations;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const auto &a = sorted[i - 1], &b = sorted[i];
        if (b.g_hat < a.g_hat - 3.0 * std::hypot(a.se, b.se)) {
            std::ostringstream os;
            os << "g-hat decreases from " << a.g_hat << " at r=" << a.r << " to " << b.g_hat << " at r=" << b.r;
            sol.monotonicity_flags.push_back(os.str());
        }
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Closed-form criteria

struct Theorem21Result {
    double beta = 0.0;
    std::vector<double> d;  // d_1 .. d_p
};

/// beta in (0,1) with sum beta^{-i} c_i = 1, and d_i = sum_{j>=i} beta^{i-j-1} c_j.
inline Theorem21Result theorem21_test_function(const std::vector<double>& c) {
    if (c.empty()) throw DomainError("theorem21: c must be nonempty");
    double sum = 0.0;
    std::size_t k_pos = c.size();
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!(c[i] >= 0.0)) throw DomainError("theorem21: c_i must be nonnegative");
        sum += c[i];
        if (c[i] > 0.0 && k_pos == c.size()) k_pos = i;
    }
    if (k_pos == c.size()) throw DomainError("theorem21: some c_i must be positive");
    if (!(sum < 1.0)) throw PreconditionError("theorem21: sum c_i must be < 1 for a root beta in (0,1)");
    auto f = [&](double beta) {
        double s = 0.0, bp = 1.0;
        for (double ci : c) {
            bp /= beta;
            s += ci * bp;
        }
        return s - 1.0;
    };
    // f is decreasing; f(1) < 0 and f(beta) > 0 below c_k^{1/k} for any c_k > 0.
    double lo = 0.5 * std::pow(c[k_pos], 1.0 / static_cast<double>(k_pos + 1));
    while (f(lo) <= 0.0) lo *= 0.5;
    std::uintmax_t it = 200;
    const auto br = boost::math::tools::toms748_solve(f, lo, 1.0, boost::math::tools::eps_tolerance<double>(53), it);
    double beta = 0.5 * (br.first + br.second);
    // One Newton polish step.
    double fp = 0.0, bp = 1.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        bp /= beta;
        fp -= static_cast<double>(i + 1) * c[i] * bp / beta;
    }
    if (fp != 0.0) {
        const double nb = beta - f(beta) / fp;
        if (nb > br.first && nb < br.second) beta = nb;
    }
    Theorem21Result out;
    out.beta = beta;
    const std::size_t p = c.size();
    out.d.assign(p, 0.0);
    // d_i = c_i / beta + d_{i+1} / beta, accumulated from the tail.
    double next = 0.0;
    for (std::size_t i = p; i-- > 0;) {
        out.d[i] = (c[i] + next) / beta;
        next = out.d[i];
    }
    return out;
}

struct Corollary22Result {
    std::string branch;  // "i" or "ii"
    std::vector<double> c;
    double sum = 0.0;
    bool holds = false;
};

/**
 * Sufficient moment condition from coefficient bounds |a(x)| <= a0 + sum a_i|x_i|,
 * b(x) <= sqrt(b0^2 + sum b_i^2 x_i^2). Branch (i) for r <= 1, branch (ii) for 1 < r <= 2.
 */
inline Corollary22Result corollary22_check(const std::vector<double>& a, const std::vector<double>& b,
                                           const ErrorDist& dist, double r) {
    if (a.size() != b.size()) throw DomainError("corollary22: a and b must have the same length");
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i] >= 0.0) || !(b[i] >= 0.0)) throw DomainError("corollary22: bounds must be nonnegative");
    if (!(r > 0.0)) throw DomainError("corollary22: r must be positive");
    if (r > 2.0) throw NotApplicableError("corollary22: only stated for r <= 2");
    if (r > 1.0 && r < 2.0 && !dist.symmetric())
        throw NotApplicableError("corollary22: 1 < r < 2 needs errors symmetric about 0");
    if (r == 2.0 && std::abs(dist.mean()) > 1e-12) throw NotApplicableError("corollary22: r = 2 needs E e = 0");
    const double m = abs_power_moment(dist, r);
    Corollary22Result out;
    double asum = 0.0;
    for (double v : a) asum += v;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = r <= 1.0 ? std::pow(a[i], r) : a[i] * std::pow(asum, r - 1.0);
        out.c.push_back(ai + std::pow(b[i], r) * m);
        out.sum += out.c.back();
    }
    out.branch = r <= 1.0 ? "i" : "ii";
    out.holds = out.sum < 1.0;
    return out;
}

struct Delay1Result {
    double r = 0.0;
    double E1 = 0.0, E2 = 0.0;  // E(|e|^r; e < 0), E(|e|^r; e > 0)
    double p1 = 0.0, p2 = 0.0;  // P(e < 0), P(e > 0)
    double m = 0.0;             // E|e|^r
    std::vector<double> c;
    double lhs = 0.0;
    bool holds = false;
    double beta = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> d;  // d[j][i], j = 0 (x_1 <= 0), 1 (x_1 > 0)
    double resid_sum = 0.0;      // d11 E1 + d21 E2 - m
    double resid_last = 0.0;     // b_jp^r (d11 E1 + d21 E2) - beta d_jp
    double resid_recursion = 0.0;  // b_ji^r m + (d_{1,i+1} p1 + d_{2,i+1} p2) - beta d_ji, i < p
    double resid_recursion_m = 0.0;  // same with the second term multiplied by m; equals the previous when m = 1
};

/**
 * Second-moment style condition for TARCH(p) with delay 1 and the piecewise
 * r-homogeneous test function V(x) = sum_i d_{j(x), i} |x_i|^r.
 */
inline Delay1Result tarch_delay1_condition(const std::vector<double>& b1, const std::vector<double>& b2,
                                           const ErrorDist& dist, double r) {
    if (b1.size() != b2.size() || b1.empty()) throw DomainError("tarch_delay1: coefficient vectors must match");
    if (r > 2.0) throw NotApplicableError("tarch_delay1: only stated for r <= 2");
    for (std::size_t i = 0; i < b1.size(); ++i)
        if (!(b1[i] > 0.0) || !(b2[i] > 0.0)) throw DomainError("tarch_delay1: all b_ji must be positive");
    Delay1Result out;
    out.r = r;
    const std::size_t p = b1.size();
    out.E1 = partial_power_moment(dist, 0.0, 1.0, r, Side::minus);
    out.E2 = partial_power_moment(dist, 0.0, 1.0, r, Side::plus);
    out.p1 = dist.prob_below(0.0);
    out.p2 = dist.prob_above(0.0);
    out.m = out.E1 + out.E2;
    out.c.resize(p);
    out.c[0] = std::pow(b1[0], r) * out.E1 + std::pow(b2[0], r) * out.E2;
    for (std::size_t i = 1; i < p; ++i) out.c[i] = (std::pow(b1[i], r) * out.p1 + std::pow(b2[i], r) * out.p2) * out.m;
    for (double ci : out.c) out.lhs += ci;
    out.holds = out.lhs < 1.0;
    if (!out.holds) return out;

    const double beta = theorem21_test_function(out.c).beta;
    out.beta = beta;
    const std::vector<const std::vector<double>*> bj = {&b1, &b2};
    out.d.assign(2, std::vector<double>(p, 0.0));
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t i = 0; i < p; ++i) {
            double s = std::pow((*bj[j])[i], r) * out.m / beta;
            for (std::size_t k = i + 1; k < p; ++k) s += std::pow(beta, static_cast<double>(i) - static_cast<double>(k) - 1.0) * out.c[k];
            out.d[j][i] = s;
        }
    const double head = out.d[0][0] * out.E1 + out.d[1][0] * out.E2;
    out.resid_sum = head - out.m;
    for (std::size_t j = 0; j < 2; ++j) {
        const double brp = std::pow((*bj[j])[p - 1], r);
        out.resid_last = std::max(out.resid_last, std::abs(brp * head - beta * out.d[j][p - 1]));
        for (std::size_t i = 0; i + 1 < p; ++i) {
            const double bri = std::pow((*bj[j])[i], r);
            const double tail = out.d[0][i + 1] * out.p1 + out.d[1][i + 1] * out.p2;
            out.resid_recursion = std::max(out.resid_recursion, std::abs(bri * out.m + tail - beta * out.d[j][i]));
            out.resid_recursion_m =
                std::max(out.resid_recursion_m, std::abs(bri * head + tail * out.m - beta * out.d[j][i]));
        }
    }
    return out;
}

/// lambda(theta) = sum_i d_{j,i} |theta_i|^r with j chosen by the sign of theta_1.
inline SphereFunction delay1_lambda(const Delay1Result& res) {
    return [d = res.d, r = res.r](std::span<const double> th) {
        const auto& row = th[0] <= 0.0 ? d[0] : d[1];
        double v = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) v += row[i] * std::pow(std::abs(th[i]), r);
        return v;
    };
}

struct Order1Analysis {
    double r = 0.0;
    double p1 = 0.0, p2 = 0.0;
    double pi_minus = 0.0, pi_plus = 0.0;
    double L1 = 0.0, L2 = 0.0;  // E log|a1 - b1 e|, E log|a2 + b2 e|
    double log_rho = 0.0;
    double nu_plus = 0.0, nu_minus = 0.0;
    double E11 = 0.0, E12 = 0.0, E21 = 0.0, E22 = 0.0;
    bool cond_4_1_max = false;      // max(E12, E22) < 1
    bool cond_4_1_product = false;  // E11 E21 < (1 - E12)(1 - E22)
    double stationary_moment = 0.0;
    bool cond_stationary_w_r = false;
    double growth_rate = 0.0;  // spectral radius of the two-state r-th moment matrix

    [[nodiscard]] bool cond_4_1() const { return cond_4_1_max && cond_4_1_product; }
};

/**
 * Closed forms for the first-order threshold model with coefficients (a1, b1)
 * on x < 0 and (a2, b2) on x > 0.
 */
inline Order1Analysis order1_analysis(double a1, double a2, double b1, double b2, const ErrorDist& dist, double r) {
    if (!(b1 > 0.0) || !(b2 > 0.0)) throw DomainError("order1_analysis: b1, b2 must be positive");
    require_moment(dist, r);
    Order1Analysis o;
    o.r = r;
    o.p1 = sign_probability(dist, a1, -b1, Side::minus);
    o.p2 = sign_probability(dist, a2, b2, Side::minus);
    const double ps = o.p1 + o.p2;
    o.pi_minus = o.p2 / ps;
    o.pi_plus = o.p1 / ps;
    o.L1 = log_abs_moment(dist, a1, -b1);
    o.L2 = log_abs_moment(dist, a2, b2);
    o.log_rho = (o.p2 * o.L1 + o.p1 * o.L2) / ps;
    o.nu_plus = (o.L2 - o.L1) / (2.0 * ps);
    o.nu_minus = -o.nu_plus;
    o.E11 = partial_power_moment(dist, a1, -b1, r, Side::minus);
    o.E12 = partial_power_moment(dist, a1, -b1, r, Side::plus);
    o.E21 = partial_power_moment(dist, a2, b2, r, Side::minus);
    o.E22 = partial_power_moment(dist, a2, b2, r, Side::plus);
    o.cond_4_1_max = std::max(o.E12, o.E22) < 1.0;
    o.cond_4_1_product = o.E11 * o.E21 < (1.0 - o.E12) * (1.0 - o.E22);
    o.stationary_moment = (o.p2 * (o.E11 + o.E12) + o.p1 * (o.E21 + o.E22)) / ps;
    o.cond_stationary_w_r = o.stationary_moment < 1.0;
    // Rows: from -1 (stay: E12, switch: E11), from +1 (switch: E21, stay: E22).
    const double tr = o.E12 + o.E22, det = o.E12 * o.E22 - o.E11 * o.E21;
    o.growth_rate = 0.5 * (tr + std::sqrt(std::max(tr * tr - 4.0 * det, 0.0)));
    return o;
}

/// Left-hand sides of the two gamma inequalities for a ratio gamma = lambda(1)/lambda(-1).
inline std::pair<double, double> order1_gamma_lhs(const Order1Analysis& o, double gamma) {
    return {gamma * o.E11 + o.E12, o.E21 / gamma + o.E22};
}

}  // namespace tarch
