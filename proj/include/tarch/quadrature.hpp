#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace tarch::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
};

inline constexpr double kDefaultTolerance = 1e-9;

namespace detail {

// Boost's double-exponential integrators precompute abscissa tables on
// construction; one instance per thread keeps integrate() calls cheap and
// avoids sharing the lazily-extended tables between threads.
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule() {
    thread_local boost::math::quadrature::tanh_sinh<double> rule(12);
    return rule;
}

inline boost::math::quadrature::exp_sinh<double>& exp_sinh_rule() {
    thread_local boost::math::quadrature::exp_sinh<double> rule(12);
    return rule;
}

// Boost's termination criterion is relative; an absolute target is reached by
// asking for a relative tolerance well below it.
inline double relative_target(double abs_tol) { return std::max(abs_tol * 1e-3, 1e-14); }

inline std::vector<double> sorted_unique(std::vector<double> cuts) {
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

}  // namespace detail

/// Integral over the finite interval [a, b]; integrable endpoint singularities are fine.
template <typename F>
Result integrate_finite(const F& f, double a, double b, double abs_tol = kDefaultTolerance) {
    if (!(b > a)) return {};
    Result r;
    double l1 = 0.0;
    // The two-argument form is used only to bypass the one-argument wrapper,
    // which can round an abscissa onto an endpoint and trip an assertion.
    auto f2 = [&](double x, double) { return f(std::clamp(x, a, b)); };
    r.value = detail::tanh_sinh_rule().integrate(f2, a, b, detail::relative_target(abs_tol), &r.error, &l1);
    return r;
}

/// Integral over [a, +inf).
template <typename F>
Result integrate_upper_tail(const F& f, double a, double abs_tol = kDefaultTolerance) {
    Result r;
    double l1 = 0.0;
    // exp_sinh needs a finite left endpoint shift; integrate g(t) = f(a + t) on [0, inf).
    auto shifted = [&](double t) { return f(a + t); };
    r.value = detail::exp_sinh_rule().integrate(shifted, 0.0, std::numeric_limits<double>::infinity(),
                                                detail::relative_target(abs_tol), &r.error, &l1);
    return r;
}

/**
 * Integral over [cuts.front(), +inf), split at every cut point. Interior cuts
 * should sit on kinks or singularities of the integrand and on the bulk of the
 * density so the double-exponential rules converge quickly on each piece.
 */
template <typename F>
Result integrate_half_line(const F& f, std::vector<double> cuts, double abs_tol = kDefaultTolerance) {
    cuts = detail::sorted_unique(std::move(cuts));
    Result total;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Result piece = integrate_finite(f, cuts[i], cuts[i + 1], abs_tol);
        total.value += piece.value;
        total.error += piece.error;
    }
    const Result tail = integrate_upper_tail(f, cuts.back(), abs_tol);
    total.value += tail.value;
    total.error += tail.error;
    return total;
}

/// Integral over the whole real line, split at the given cut points (at least one).
template <typename F>
Result integrate_real_line(const F& f, std::vector<double> cuts, double abs_tol = kDefaultTolerance) {
    cuts = detail::sorted_unique(std::move(cuts));
    auto reflected = [&](double t) { return f(-t); };
    Result total = integrate_upper_tail(reflected, -cuts.front(), abs_tol);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Result piece = integrate_finite(f, cuts[i], cuts[i + 1], abs_tol);
        total.value += piece.value;
        total.error += piece.error;
    }
    const Result tail = integrate_upper_tail(f, cuts.back(), abs_tol);
    total.value += tail.value;
    total.error += tail.error;
    return total;
}

}  // namespace tarch::quad
