#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tarch/error_dist.hpp"
#include "tarch/model.hpp"
#include "tarch/parallel.hpp"
#include "tarch/rng.hpp"
#include "tarch/sphere_grid.hpp"
#include "tarch/stats.hpp"

namespace tarch {

inline constexpr double kLogFloor = -690.0;

/// log(x) clamped below at kLogFloor; bumps `count` when clamped.
inline double guarded_log(double x, std::uint64_t& count) {
    if (x > 0.0) {
        const double l = std::log(x);
        if (l >= kLogFloor) return l;
    }
    ++count;
    return kLogFloor;
}

/**
 * In-place collapsed update theta <- (z, theta_1..theta_{p-1}) / w.
 * Returns w; when w == 0 the state is left untouched.
 */
inline double collapsed_step_inplace(const ModelSpec& spec, std::span<double> th, double u, double* z_out = nullptr) {
    const AB h = eval_ab_star(spec, th);
    const double z = h.a + h.b * u;
    if (z_out) *z_out = z;
    const double w = std::sqrt(z * z + trailing_norm2(th));
    if (w == 0.0) return 0.0;
    const std::size_t p = th.size();
    for (std::size_t k = p - 1; k >= 1; --k) th[k] = th[k - 1] / w;
    th[0] = z / w;
    double n2 = 0.0;
    for (double v : th) n2 += v * v;
    if (n2 != 1.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& v : th) v *= inv;
    }
    return w;
}

/// One collapsed step. A degenerate step (w = 0) returns the state unchanged; CollapsedChain handles it.
inline SphereState step(const ModelSpec& spec, const SphereState& s, double u) {
    SphereState out = s;
    collapsed_step_inplace(spec, out.theta, u);
    return out;
}

struct ChainCounters {
    std::uint64_t degenerate = 0;  // w = 0 hit, error redrawn
    std::uint64_t restarts = 0;    // w = 0 twice, theta restarted uniformly
    std::uint64_t log_w_clamped = 0;
    std::uint64_t log_alt_clamped = 0;
};

/**
 * @brief The collapsed chain theta*_t driven by i.i.d. errors from one stream.
 */
class CollapsedChain {
public:
    struct Step {
        double u = 0.0;
        double z = 0.0;
        double w = 0.0;
        double log_w = 0.0;
        double log_alt = 0.0;     // log(|z| / |theta_{t-1,1}|)
        double theta1_prev = 0.0;
    };

    CollapsedChain(const ModelSpec& spec, const ErrorDist& dist, RandomStream rs,
                   std::optional<std::vector<double>> theta0 = std::nullopt)
        : spec_(&spec), dist_(&dist), rs_(std::move(rs)) {
        theta_ = theta0 ? SphereState(*theta0).theta : rs_.sphere_point(spec.p());
    }

    const Step& advance() {
        last_.theta1_prev = theta_[0];
        last_.u = dist_->sample(rs_);
        last_.w = collapsed_step_inplace(*spec_, theta_, last_.u, &last_.z);
        if (last_.w == 0.0) {
            ++counters_.degenerate;
            last_.u = dist_->sample(rs_);
            last_.w = collapsed_step_inplace(*spec_, theta_, last_.u, &last_.z);
            if (last_.w == 0.0) {
                ++counters_.restarts;
                theta_ = rs_.sphere_point(spec_->p());
                last_.theta1_prev = theta_[0];
                last_.u = dist_->sample(rs_);
                last_.w = collapsed_step_inplace(*spec_, theta_, last_.u, &last_.z);
            }
        }
        last_.log_w = guarded_log(last_.w, counters_.log_w_clamped);
        const double lz = guarded_log(std::abs(last_.z), counters_.log_alt_clamped);
        const double lt = guarded_log(std::abs(last_.theta1_prev), counters_.log_alt_clamped);
        last_.log_alt = lz - lt;
        return last_;
    }

    [[nodiscard]] const std::vector<double>& theta() const noexcept { return theta_; }
    [[nodiscard]] const ChainCounters& counters() const noexcept { return counters_; }
    RandomStream& stream() noexcept { return rs_; }

private:
    const ModelSpec* spec_;
    const ErrorDist* dist_;
    RandomStream rs_;
    std::vector<double> theta_;
    Step last_;
    ChainCounters counters_;
};

// ---------------------------------------------------------------------------
// Lyapounov exponent

struct LyapEstimate {
    std::string estimator = "log_w";
    double mean_logw = 0.0;
    double se = 0.0;
    std::uint64_t n_steps = 0;  // per replicate
    std::uint64_t burn_in = 0;
    std::uint64_t replicates = 1;
    std::uint64_t underflow_count = 0;
    std::uint64_t degenerate_count = 0;
    std::uint64_t restart_count = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] double underflow_fraction() const {
        return static_cast<double>(underflow_count) / static_cast<double>(std::max<std::uint64_t>(n_steps * replicates, 1));
    }
    [[nodiscard]] bool clean() const { return underflow_fraction() < 1e-4; }
    [[nodiscard]] bool unreliable() const { return underflow_fraction() > 1e-2; }
};

struct LyapOptions {
    std::uint64_t n_steps = 1'000'000;
    std::uint64_t burn_in = 10'000;
    std::size_t batches = 50;
    std::size_t replicates = 1;
    unsigned threads = 1;
    std::optional<std::vector<double>> theta0;  // default: uniform on the sphere
};

struct TraceRow {
    std::uint64_t t = 0;
    std::vector<double> theta;
    double log_w = 0.0;
};

struct LyapPair {
    LyapEstimate main;  // ergodic average of log w
    LyapEstimate alt;   // ergodic average of log(|z| / |theta_1|)
};

namespace detail {

inline LyapEstimate merge_replicates(const std::vector<LyapEstimate>& reps) {
    LyapEstimate out = reps.front();
    out.replicates = reps.size();
    double m = 0.0, v = 0.0;
    out.underflow_count = out.degenerate_count = out.restart_count = 0;
    for (const auto& r : reps) {
        m += r.mean_logw;
        v += r.se * r.se;
        out.underflow_count += r.underflow_count;
        out.degenerate_count += r.degenerate_count;
        out.restart_count += r.restart_count;
    }
    const double R = static_cast<double>(reps.size());
    out.mean_logw = m / R;
    out.se = std::sqrt(v) / R;
    return out;
}

}  // namespace detail

/// Both estimators from the same chains. Replicate k runs on stream.split(k).
inline LyapPair estimate_lyapunov_pair(const ModelSpec& spec, const ErrorDist& dist, const LyapOptions& opt,
                                       const RandomStream& stream, std::vector<TraceRow>* trace = nullptr,
                                       std::uint64_t trace_every = 50) {
    if (opt.n_steps < 2 || opt.batches < 2) throw DomainError("estimate_lyapunov: n_steps and batches too small");
    if (opt.replicates == 0) throw DomainError("estimate_lyapunov: replicates must be positive");
    auto run = [&](std::size_t rep) {
        CollapsedChain chain(spec, dist, stream.split(static_cast<std::uint64_t>(rep)), opt.theta0);
        for (std::uint64_t t = 0; t < opt.burn_in; ++t) chain.advance();
        const ChainCounters c0 = chain.counters();
        stats::BatchMeans bm(opt.n_steps, opt.batches), ba(opt.n_steps, opt.batches);
        for (std::uint64_t t = 0; t < opt.n_steps; ++t) {
            const auto& s = chain.advance();
            bm.add(s.log_w);
            ba.add(s.log_alt);
            if (trace && rep == 0 && t % trace_every == 0) trace->push_back({t, chain.theta(), s.log_w});
        }
        const ChainCounters& c = chain.counters();
        LyapPair out;
        for (LyapEstimate* e : {&out.main, &out.alt}) {
            e->n_steps = opt.n_steps;
            e->burn_in = opt.burn_in;
            e->seed = stream.seed();
            e->degenerate_count = c.degenerate - c0.degenerate;
            e->restart_count = c.restarts - c0.restarts;
        }
        const auto rm = bm.result(), ra = ba.result();
        out.main.mean_logw = rm.mean;
        out.main.se = rm.se;
        out.main.underflow_count = c.log_w_clamped - c0.log_w_clamped;
        out.alt.estimator = "log_abs_z_over_theta1";
        out.alt.mean_logw = ra.mean;
        out.alt.se = ra.se;
        out.alt.underflow_count = c.log_alt_clamped - c0.log_alt_clamped;
        return out;
    };
    // Tracing writes to a shared vector, so it forces a sequential run.
    const auto reps = parallel_map(opt.replicates, trace ? 1u : opt.threads, run);
    std::vector<LyapEstimate> mains, alts;
    for (const auto& r : reps) {
        mains.push_back(r.main);
        alts.push_back(r.alt);
    }
    return {detail::merge_replicates(mains), detail::merge_replicates(alts)};
}

inline LyapEstimate estimate_lyapunov(const ModelSpec& spec, const ErrorDist& dist, const LyapOptions& opt,
                                      const RandomStream& stream) {
    return estimate_lyapunov_pair(spec, dist, opt, stream).main;
}

inline LyapEstimate estimate_lyapunov_alt(const ModelSpec& spec, const ErrorDist& dist, const LyapOptions& opt,
                                          const RandomStream& stream) {
    return estimate_lyapunov_pair(spec, dist, opt, stream).alt;
}

enum class StabilityVerdict { geometrically_ergodic, transient, inconclusive };

inline const char* verdict_name(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::geometrically_ergodic: return "geometrically-ergodic";
        case StabilityVerdict::transient: return "transient";
        case StabilityVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

inline StabilityVerdict lyapunov_verdict(const LyapEstimate& e, double n_sigma = 3.0) {
    if (e.unreliable()) return StabilityVerdict::inconclusive;
    if (e.mean_logw + n_sigma * e.se < 0.0) return StabilityVerdict::geometrically_ergodic;
    if (e.mean_logw - n_sigma * e.se > 0.0) return StabilityVerdict::transient;
    return StabilityVerdict::inconclusive;
}

// ---------------------------------------------------------------------------
// Near-equilibrium function nu

/// q(theta) = E log w(theta, e) by quadrature.
inline double q_log_w(const ModelSpec& spec, const ErrorDist& dist, std::span<const double> theta) {
    const AB h = eval_ab_star(spec, theta);
    const double s = std::sqrt(trailing_norm2(theta));
    if (h.a == 0.0 && h.b == 0.0) return s > 0.0 ? std::log(s) : kLogFloor;
    return log_norm_moment(dist, h.a, h.b, s);
}

/// Grid-tabulated function on the sphere with nearest-grid-point evaluation.
struct NuFunction {
    std::size_t T = 0;
    std::size_t inner_samples = 0;
    SpherePoints grid;
    std::vector<double> values;
    std::vector<double> se;  // Monte Carlo standard error per grid point (0 for exact entries)

    [[nodiscard]] double operator()(std::span<const double> theta) const {
        if (grid.size() == 1) return values.front();
        std::size_t best = 0;
        double best_dot = -2.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double dot = 0.0;
            for (std::size_t k = 0; k < theta.size(); ++k) dot += grid[g][k] * theta[k];
            if (dot > best_dot) {
                best_dot = dot;
                best = g;
            }
        }
        return values[best];
    }

    static NuFunction constant(std::size_t p, double c) {
        NuFunction nu;
        nu.grid = {std::vector<double>(p, 0.0)};
        nu.grid.front()[0] = 1.0;
        nu.values = {c};
        nu.se = {0.0};
        return nu;
    }
};

struct NuOptions {
    unsigned threads = 1;
};

/**
 * nu(theta) = sum_{t=0}^{T-1} E(q(theta*_t) | theta*_0 = theta). The t = 0 term
 * is q(theta) by quadrature; later terms use E q(theta*_t) = E log w(theta*_t, e_{t+1})
 * and average the sampled log w over inner_samples paths. Every grid point
 * reuses the same error sequence (common random numbers), so differences of
 * nu between grid points are much less noisy than the values themselves.
 */
inline NuFunction build_nu(const ModelSpec& spec, const ErrorDist& dist, std::size_t T, const SpherePoints& grid,
                           std::size_t inner_samples, const RandomStream& stream, const NuOptions& opt = {}) {
    if (T == 0) throw DomainError("build_nu: T must be at least 1");
    if (grid.empty()) throw DomainError("build_nu: empty grid");
    NuFunction nu;
    nu.T = T;
    nu.inner_samples = inner_samples;
    nu.grid = grid;
    struct Cell {
        double value, se;
    };
    auto eval = [&](std::size_t g) -> Cell {
        const double q0 = q_log_w(spec, dist, grid[g]);
        if (T == 1 || inner_samples == 0) return {q0, 0.0};
        std::vector<double> path_sums(inner_samples);
        for (std::size_t j = 0; j < inner_samples; ++j) {
            CollapsedChain chain(spec, dist, stream.split(static_cast<std::uint64_t>(j)), grid[g]);
            chain.advance();  // t = 0 -> 1; its log w is replaced by the exact q0
            double s = 0.0;
            for (std::size_t t = 1; t < T; ++t) s += chain.advance().log_w;
            path_sums[j] = s;
        }
        const auto me = stats::mean_stderr(path_sums);
        return {q0 + me.mean, me.se};
    };
    const auto cells = parallel_map(grid.size(), opt.threads, eval);
    for (const auto& c : cells) {
        nu.values.push_back(c.value);
        nu.se.push_back(c.se);
    }
    return nu;
}

struct EquilibriumRow {
    std::vector<double> theta;
    double mean = 0.0;  // E(nu(theta_1) - nu(theta) + log w(theta, e_1))
    double se = 0.0;
    double deviation = 0.0;  // mean - log_rho
};

struct EquilibriumReport {
    std::vector<EquilibriumRow> rows;
    double max_abs_deviation = 0.0;
    double sup_mean = -INFINITY;
    double sup_upper = -INFINITY;  // max over probes of mean + 3 se
    bool v_uniformly_ergodic = false;
};

/// Monte Carlo check of the near-equilibrium equation at each probe.
inline EquilibriumReport check_near_equilibrium(const ModelSpec& spec, const ErrorDist& dist, const NuFunction& nu,
                                                const SpherePoints& probes, std::size_t inner_samples, double log_rho,
                                                const RandomStream& stream, unsigned threads = 1) {
    EquilibriumReport rep;
    auto eval = [&](std::size_t i) {
        RandomStream rs = stream.split(static_cast<std::uint64_t>(i));
        const double nu0 = nu(probes[i]);
        std::vector<double> vals(inner_samples);
        std::vector<double> th = probes[i];
        for (std::size_t j = 0; j < inner_samples; ++j) {
            th = probes[i];
            double u = dist.sample(rs);
            double w = collapsed_step_inplace(spec, th, u);
            if (w == 0.0) {
                u = dist.sample(rs);
                w = collapsed_step_inplace(spec, th, u);
            }
            std::uint64_t clamp = 0;
            vals[j] = nu(th) - nu0 + guarded_log(w, clamp);
        }
        const auto me = stats::mean_stderr(vals);
        return EquilibriumRow{probes[i], me.mean, me.se, me.mean - log_rho};
    };
    rep.rows = parallel_map(probes.size(), threads, eval);
    for (const auto& r : rep.rows) {
        rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(r.deviation));
        rep.sup_mean = std::max(rep.sup_mean, r.mean);
        rep.sup_upper = std::max(rep.sup_upper, r.mean + 3.0 * r.se);
    }
    rep.v_uniformly_ergodic = rep.sup_upper < 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Stationarity diagnostics

struct StationarityReport {
    std::size_t n_samples = 0;
    std::size_t thin = 50;
    double identity_max_diff = 0.0;  // |z/w - theta_{t,1}| along one run
    stats::KsResult ks;              // z/w from one run vs theta_1 from an independent run
    double ks_alpha = 0.01;
    bool ks_pass = false;
    double frac_positive = 0.0;  // share of theta_1 > 0
    double sign_balance_z = 0.0; // (frac - 1/2) / binomial se
    bool sign_balanced = false;
    // p = 1: transition counts of the two-state chain
    std::uint64_t from_minus = 0, minus_to_plus = 0, from_plus = 0, plus_to_minus = 0;
    std::uint64_t visits_minus = 0, visits_plus = 0;
};

inline StationarityReport stationarity_diagnostic(const ModelSpec& spec, const ErrorDist& dist, std::size_t n,
                                                  std::uint64_t burn_in, const RandomStream& stream,
                                                  std::size_t thin = 50, double alpha = 0.01) {
    StationarityReport rep;
    rep.thin = thin;
    rep.ks_alpha = alpha;
    std::vector<double> zw, th1;
    zw.reserve(n);
    th1.reserve(n);
    {
        CollapsedChain a(spec, dist, stream.split("first"));
        for (std::uint64_t t = 0; t < burn_in; ++t) a.advance();
        for (std::size_t t = 0; t < n * thin; ++t) {
            const double prev = a.theta()[0];
            const auto& s = a.advance();
            const double ratio = s.z / s.w;
            rep.identity_max_diff = std::max(rep.identity_max_diff, std::abs(ratio - a.theta()[0]));
            if (spec.p() == 1) {
                const bool was_minus = prev < 0.0, now_minus = a.theta()[0] < 0.0;
                if (was_minus) {
                    ++rep.from_minus;
                    if (!now_minus) ++rep.minus_to_plus;
                } else {
                    ++rep.from_plus;
                    if (now_minus) ++rep.plus_to_minus;
                }
                (now_minus ? rep.visits_minus : rep.visits_plus) += 1;
            }
            if (t % thin == thin - 1) zw.push_back(ratio);
        }
    }
    {
        CollapsedChain b(spec, dist, stream.split("second"));
        for (std::uint64_t t = 0; t < burn_in; ++t) b.advance();
        for (std::size_t t = 0; t < n * thin; ++t) {
            b.advance();
            if (t % thin == thin - 1) th1.push_back(b.theta()[0]);
        }
    }
    rep.n_samples = n;
    std::size_t pos = std::count_if(th1.begin(), th1.end(), [](double v) { return v > 0.0; });
    rep.frac_positive = static_cast<double>(pos) / static_cast<double>(n);
    rep.sign_balance_z = (rep.frac_positive - 0.5) / std::sqrt(0.25 / static_cast<double>(n));
    rep.sign_balanced = std::abs(rep.sign_balance_z) < 3.0;
    rep.ks = stats::ks_two_sample(std::move(zw), std::move(th1));
    rep.ks_pass = rep.ks.p_value > alpha;
    return rep;
}

}  // namespace tarch
