#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tarch/collapsed.hpp"
#include "tarch/error_dist.hpp"
#include "tarch/exceptions.hpp"
#include "tarch/parallel.hpp"
#include "tarch/rng.hpp"
#include "tarch/stats.hpp"

namespace tarch {

/// Companion matrix of squared lags for pure ARCH(p): first row b_i^2 e^2, ones on the subdiagonal.
inline Eigen::MatrixXd build_B(const std::vector<double>& b, double e) {
    const auto p = static_cast<Eigen::Index>(b.size());
    if (p == 0) throw DomainError("build_B: p must be positive");
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p, p);
    const double e2 = e * e;
    for (Eigen::Index i = 0; i < p; ++i) B(0, i) = b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)] * e2;
    for (Eigen::Index i = 1; i < p; ++i) B(i, i - 1) = 1.0;
    return B;
}

enum class MatrixNorm { frobenius, max_row_sum };

inline const char* matrix_norm_name(MatrixNorm n) { return n == MatrixNorm::frobenius ? "frobenius" : "max-row-sum"; }

inline double matrix_norm(const Eigen::MatrixXd& M, MatrixNorm kind) {
    if (kind == MatrixNorm::frobenius) return M.norm();
    return M.cwiseAbs().rowwise().sum().maxCoeff();
}

/**
 * Running product M_t = B_t ... B_1 kept at unit norm. The log of each
 * renormalization factor is Lambda_t = log(|M_t| / |M_{t-1}|).
 */
class CompanionProduct {
public:
    CompanionProduct(std::vector<double> b, MatrixNorm norm = MatrixNorm::frobenius)
        : b_(std::move(b)), norm_(norm), M_(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(b_.size()),
                                                                      static_cast<Eigen::Index>(b_.size()))) {
        if (b_.empty()) throw DomainError("CompanionProduct: p must be positive");
        for (double v : b_)
            if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("CompanionProduct: b_i must be positive");
        M_ /= matrix_norm(M_, norm_);
    }

    /// Left-multiplies by B(e) and returns Lambda_t.
    double absorb(double e) {
        const double e2 = e * e;
        const auto p = static_cast<Eigen::Index>(b_.size());
        // B M: first row is a weighted sum of rows of M, the rest shift down.
        Eigen::RowVectorXd top = Eigen::RowVectorXd::Zero(M_.cols());
        for (Eigen::Index i = 0; i < p; ++i) top += (b_[static_cast<std::size_t>(i)] * b_[static_cast<std::size_t>(i)] * e2) * M_.row(i);
        for (Eigen::Index i = p - 1; i > 0; --i) M_.row(i) = M_.row(i - 1);
        M_.row(0) = top;
        const double nrm = matrix_norm(M_, norm_);
        if (!(nrm > 0.0)) {
            log_norm_ = -std::numeric_limits<double>::infinity();
            return log_norm_;
        }
        M_ /= nrm;
        const double lam = std::log(nrm);
        log_norm_ += lam;
        return lam;
    }

    [[nodiscard]] const Eigen::MatrixXd& normalized() const noexcept { return M_; }
    [[nodiscard]] double log_norm() const noexcept { return log_norm_; }
    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return b_; }

private:
    std::vector<double> b_;
    MatrixNorm norm_;
    Eigen::MatrixXd M_;
    double log_norm_ = 0.0;
};

struct GammaEstimate {
    double gamma = 0.0;
    double se = 0.0;
    std::uint64_t n_steps = 0;
    std::size_t replicates = 0;
    MatrixNorm norm = MatrixNorm::frobenius;
    std::vector<double> per_replicate;
};

struct GammaTraceRow {
    std::uint64_t t = 0;
    double running = 0.0;  // (1/t) log |M_t|
};

/**
 * Top Lyapounov exponent of the companion products, gamma = lim (1/t) log |M_t|.
 * The standard error comes from batch means of Lambda_t within each replicate,
 * combined across replicates.
 */
inline GammaEstimate estimate_gamma(const std::vector<double>& b, const ErrorDist& dist, std::uint64_t n,
                                    std::size_t replicates, const RandomStream& stream,
                                    MatrixNorm norm = MatrixNorm::frobenius, unsigned threads = 1,
                                    std::vector<GammaTraceRow>* trace = nullptr, std::uint64_t trace_every = 1000) {
    if (n < 2) throw DomainError("estimate_gamma: n too small");
    if (replicates == 0) replicates = 1;
    struct Rep {
        stats::MeanError me;
        std::vector<GammaTraceRow> trace;
    };
    const auto reps = parallel_map(replicates, trace ? 1u : threads, [&](std::size_t k) {
        RandomStream rs = stream.split(static_cast<std::uint64_t>(k));
        CompanionProduct cp(b, norm);
        stats::BatchMeans bm(n, 50);
        Rep out;
        for (std::uint64_t t = 1; t <= n; ++t) {
            bm.add(cp.absorb(dist.sample(rs)));
            if (trace && k == 0 && t % trace_every == 0) out.trace.push_back({t, cp.log_norm() / static_cast<double>(t)});
        }
        out.me = bm.result();
        return out;
    });
    GammaEstimate g;
    g.n_steps = n;
    g.replicates = replicates;
    g.norm = norm;
    double var = 0.0;
    for (const auto& r : reps) {
        g.per_replicate.push_back(r.me.mean);
        g.gamma += r.me.mean;
        var += r.me.se * r.me.se;
    }
    g.gamma /= static_cast<double>(replicates);
    g.se = std::sqrt(var) / static_cast<double>(replicates);
    if (trace) *trace = reps.front().trace;
    return g;
}

struct TRecursionCheck {
    double max_T_deviation = 0.0;
    double max_w2_deviation = 0.0;
    std::uint64_t steps = 0;
};

/**
 * Runs the collapsed chain from theta_0 = (1,...,1)/sqrt(p) next to the matrix
 * form T_t = M_t T_0 / 1'M_t T_0 with T_0 = (1/p) 1, on the same errors, and
 * compares squared coordinates and w^2 with 1'M_t T_0 / 1'M_{t-1} T_0.
 */
inline TRecursionCheck verify_T_recursion(const std::vector<double>& b, const ErrorDist& dist, std::uint64_t n,
                                          const RandomStream& stream) {
    const std::size_t p = b.size();
    RegimeCoeffs rc;
    rc.a0 = 0.0;
    rc.avec.assign(p, 0.0);
    rc.b0 = 1.0;
    rc.bvec = b;
    const ModelSpec spec = ModelSpec::single(rc);
    std::vector<double> theta(p, 1.0 / std::sqrt(static_cast<double>(p)));
    const Eigen::VectorXd T0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p), 1.0 / static_cast<double>(p));
    CompanionProduct cp(b);
    double prev_mass = (cp.normalized() * T0).sum();
    RandomStream rs = stream;
    TRecursionCheck out;
    out.steps = n;
    for (std::uint64_t t = 0; t < n; ++t) {
        const double e = dist.sample(rs);
        const double w = collapsed_step_inplace(spec, theta, e);
        const double lam = cp.absorb(e);
        const Eigen::VectorXd MT = cp.normalized() * T0;
        const double mass = MT.sum();
        // 1'M_t T0 / 1'M_{t-1} T0 in terms of the normalized products.
        const double ratio = std::exp(lam) * mass / prev_mass;
        out.max_w2_deviation = std::max(out.max_w2_deviation, std::abs(w * w - ratio) / std::max(1.0, w * w));
        for (std::size_t i = 0; i < p; ++i)
            out.max_T_deviation =
                std::max(out.max_T_deviation, std::abs(theta[i] * theta[i] - MT(static_cast<Eigen::Index>(i)) / mass));
        prev_mass = mass;
    }
    return out;
}

struct MatrixMomentRow {
    std::uint64_t t = 0;
    double log_moment = 0.0;  // log E |M_t|^{r/2}
    double rate = 0.0;        // (E |M_t|^{r/2})^{1/t}
};

/// (E |M_t|^{r/2})^{1/t} on a grid of t by plain Monte Carlo in log space.
inline std::vector<MatrixMomentRow> matrix_moment_rates(const std::vector<double>& b, const ErrorDist& dist, double r,
                                                        const std::vector<std::uint64_t>& t_grid, std::size_t samples,
                                                        const RandomStream& stream,
                                                        MatrixNorm norm = MatrixNorm::frobenius, unsigned threads = 1) {
    if (t_grid.empty()) return {};
    const std::uint64_t t_max = *std::max_element(t_grid.begin(), t_grid.end());
    const auto logs = parallel_map(samples, threads, [&](std::size_t s) {
        RandomStream rs = stream.split(static_cast<std::uint64_t>(s));
        CompanionProduct cp(b, norm);
        std::vector<double> at;
        for (std::uint64_t t = 1; t <= t_max; ++t) {
            cp.absorb(dist.sample(rs));
            if (std::find(t_grid.begin(), t_grid.end(), t) != t_grid.end()) at.push_back(0.5 * r * cp.log_norm());
        }
        return at;
    });
    std::vector<std::uint64_t> sorted = t_grid;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<MatrixMomentRow> rows;
    std::vector<double> col(samples);
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        for (std::size_t s = 0; s < samples; ++s) col[s] = logs[s][k];
        MatrixMomentRow row;
        row.t = sorted[k];
        row.log_moment = stats::log_sum_exp(col) - std::log(static_cast<double>(samples));
        row.rate = std::exp(row.log_moment / static_cast<double>(row.t));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace tarch
