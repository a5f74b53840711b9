#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace tarch::stats {

/// Neumaier-compensated running sum.
class KahanSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanError {
    double mean = 0.0;
    double se = 0.0;
};

inline double mean(std::span<const double> xs) {
    KahanSum s;
    for (double x : xs) s.add(x);
    return xs.empty() ? 0.0 : s.value() / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    KahanSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return s.value() / static_cast<double>(xs.size() - 1);
}

/// Mean with the naive i.i.d. standard error.
inline MeanError mean_stderr(std::span<const double> xs) {
    return {mean(xs), std::sqrt(sample_variance(xs) / static_cast<double>(std::max<std::size_t>(xs.size(), 1)))};
}

/**
 * Accumulates a dependent sequence into contiguous batches and reports the
 * overall mean with a batch-means standard error. The number of observations
 * must be known up front so batch boundaries are fixed.
 */
class BatchMeans {
public:
    BatchMeans(std::size_t n_total, std::size_t n_batches)
        : batch_size_(std::max<std::size_t>(n_total / std::max<std::size_t>(n_batches, 1), 1)),
          sums_(std::max<std::size_t>(n_batches, 1)) {}

    void add(double x) {
        std::size_t b = count_ / batch_size_;
        if (b >= sums_.size()) b = sums_.size() - 1;  // remainder goes into the last batch
        sums_[b].add(x);
        total_.add(x);
        ++count_;
    }

    [[nodiscard]] std::size_t count() const noexcept { return count_; }
    [[nodiscard]] std::size_t batches() const noexcept { return sums_.size(); }

    [[nodiscard]] MeanError result() const {
        MeanError out;
        if (count_ == 0) return out;
        out.mean = total_.value() / static_cast<double>(count_);
        std::vector<double> bm;
        bm.reserve(sums_.size());
        for (std::size_t b = 0; b < sums_.size(); ++b) {
            const std::size_t lo = b * batch_size_;
            if (lo >= count_) break;
            const std::size_t hi = (b + 1 == sums_.size()) ? count_ : std::min(count_, lo + batch_size_);
            bm.push_back(sums_[b].value() / static_cast<double>(hi - lo));
        }
        if (bm.size() >= 2) out.se = std::sqrt(sample_variance(bm) / static_cast<double>(bm.size()));
        return out;
    }

private:
    std::size_t batch_size_;
    std::vector<KahanSum> sums_;
    KahanSum total_;
    std::size_t count_ = 0;
};

inline double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    KahanSum s;
    for (double x : xs) s.add(std::exp(x - m));
    return m + std::log(s.value());
}

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

/// Ordinary least squares fit y = intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

/// Survival function of the Kolmogorov distribution, P(K > x).
inline double kolmogorov_sf(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
    double distance = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
inline KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)};
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace tarch::stats
