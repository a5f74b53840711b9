#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "tarch/exceptions.hpp"
#include "tarch/quadrature.hpp"
#include "tarch/rng.hpp"

namespace tarch {

enum class Family { gaussian, laplace, student_t };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::gaussian: return "gaussian";
        case Family::laplace: return "laplace";
        case Family::student_t: return "student-t";
    }
    return "?";
}

/// Which part of the real line a sign-restricted moment integrates over.
enum class Side { plus, minus, both };

/// One location-scale component of an error law: e = location + scale * Z.
struct ErrorAtom {
    Family family = Family::gaussian;
    double df = 0.0;  // student-t only
    double weight = 1.0;
    double location = 0.0;
    double scale = 1.0;
};

struct MixtureComponent {
    double weight = 1.0;
    double scale = 1.0;
};

namespace detail {

// Standardized densities: gaussian N(0,1), laplace 0.5*exp(-|z|), student-t(df).
inline double std_pdf(const ErrorAtom& a, double t_norm, double z) {
    switch (a.family) {
        case Family::gaussian: return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
        case Family::laplace: return 0.5 * std::exp(-std::abs(z));
        case Family::student_t: return t_norm * std::pow(1.0 + z * z / a.df, -0.5 * (a.df + 1.0));
    }
    return 0.0;
}

inline double std_cdf(const ErrorAtom& a, double z) {
    switch (a.family) {
        case Family::gaussian: return 0.5 * std::erfc(-z / std::numbers::sqrt2);
        case Family::laplace: return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
        case Family::student_t: return boost::math::cdf(boost::math::students_t_distribution<double>(a.df), z);
    }
    return 0.0;
}

inline double std_sf(const ErrorAtom& a, double z) {
    if (a.family == Family::student_t)
        return boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>(a.df), z));
    return std_cdf(a, -z);
}

inline double t_normalizer(double df) {
    return std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df)) / std::sqrt(df * std::numbers::pi);
}

// E|Z|^r for the standardized family.
inline double std_abs_moment(const ErrorAtom& a, double r) {
    switch (a.family) {
        case Family::gaussian:
            return std::exp(0.5 * r * std::log(2.0) + std::lgamma(0.5 * (r + 1.0))) * std::numbers::inv_sqrtpi;
        case Family::laplace: return std::tgamma(r + 1.0);
        case Family::student_t:
            return std::exp(0.5 * r * std::log(a.df) + std::lgamma(0.5 * (r + 1.0)) + std::lgamma(0.5 * (a.df - r)) -
                            std::lgamma(0.5 * a.df)) *
                   std::numbers::inv_sqrtpi;
    }
    return 0.0;
}

// sup_v (c + |v|) f(v) with c = 1/scale, i.e. sup_u (1+|u|) f_scaled(u) for a centred atom.
inline double std_weighted_sup(const ErrorAtom& a, double t_norm, double c) {
    double v = 0.0;
    switch (a.family) {
        case Family::gaussian: v = 0.5 * (-c + std::sqrt(c * c + 4.0)); break;
        case Family::laplace: v = std::max(0.0, 1.0 - c); break;
        case Family::student_t: {
            const double nu = a.df;
            v = (-(nu + 1.0) * c + std::sqrt((nu + 1.0) * (nu + 1.0) * c * c + 4.0 * nu * nu)) / (2.0 * nu);
            break;
        }
    }
    return (c + v) * std_pdf(a, t_norm, v);
}

inline constexpr double kBulkWidth = 10.0;

}  // namespace detail

/**
 * @brief I.i.d. error law: one of the standard families or a finite scale
 * mixture of one base family.
 *
 * Internally every law is a list of location-scale atoms, so moment
 * integrals are always weighted sums of single-family integrals.
 */
class ErrorDist {
public:
    static ErrorDist gaussian(double sd = 1.0, double location = 0.0) {
        return single({Family::gaussian, 0.0, 1.0, location, sd});
    }
    /// Density exp(-|u - location| / scale) / (2 scale); the default scale gives unit variance.
    static ErrorDist laplace(double scale = std::numbers::sqrt2 / 2.0, double location = 0.0) {
        return single({Family::laplace, 0.0, 1.0, location, scale});
    }
    static ErrorDist student_t(double df, double scale = 1.0, double location = 0.0) {
        if (!(df > 0.0)) throw ConfigError("student-t: df must be positive");
        return single({Family::student_t, df, 1.0, location, scale});
    }

    /// Scale mixture: component k is base scaled by s_k (location and scale both multiplied).
    static ErrorDist mixture(const ErrorDist& base, const std::vector<MixtureComponent>& components) {
        if (base.is_mixture()) throw ConfigError("mixture: base must be a single family");
        if (components.empty()) throw ConfigError("mixture: needs at least one component");
        double wsum = 0.0;
        for (const auto& c : components) {
            if (!(c.weight > 0.0)) throw ConfigError("mixture: weights must be positive");
            if (!(c.scale > 0.0)) throw ConfigError("mixture: scales must be positive");
            wsum += c.weight;
        }
        if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError("mixture: weights must sum to 1");
        ErrorDist d;
        const ErrorAtom& b = base.atoms_.front();
        for (const auto& c : components)
            d.atoms_.push_back({b.family, b.df, c.weight / wsum, b.location * c.scale, b.scale * c.scale});
        d.mixture_ = true;
        d.finish();
        return d;
    }

    [[nodiscard]] const std::vector<ErrorAtom>& atoms() const noexcept { return atoms_; }
    [[nodiscard]] bool is_mixture() const noexcept { return mixture_; }
    [[nodiscard]] Family family() const noexcept { return atoms_.front().family; }

    /// Largest exponent declared to have a finite absolute moment.
    [[nodiscard]] double r0() const noexcept {
        return family() == Family::student_t ? atoms_.front().df - 1e-9 : 64.0;
    }

    [[nodiscard]] bool symmetric() const noexcept {
        for (const auto& a : atoms_)
            if (a.location != 0.0) return false;
        return true;
    }

    /// E e; only meaningful when r0() > 1.
    [[nodiscard]] double mean() const noexcept {
        double m = 0.0;
        for (const auto& a : atoms_) m += a.weight * a.location;
        return m;
    }

    [[nodiscard]] double density(double u) const {
        double s = 0.0;
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            const auto& a = atoms_[k];
            s += a.weight * detail::std_pdf(a, t_norm_[k], (u - a.location) / a.scale) / a.scale;
        }
        return s;
    }

    [[nodiscard]] double cdf(double u) const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.weight * detail::std_cdf(a, (u - a.location) / a.scale);
        return s;
    }

    /// P(e > c), computed from the survival function to keep far-tail accuracy.
    [[nodiscard]] double prob_above(double c) const {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.weight * detail::std_sf(a, (c - a.location) / a.scale);
        return s;
    }

    [[nodiscard]] double prob_below(double c) const { return cdf(c); }

    /**
     * Upper bound for sup_u (1+|u|) f(u). Exact for a single centred family;
     * for mixtures the component sups are summed, and a location shift is
     * absorbed through 1+|u| <= (1+|mu|)(1+|u-mu|).
     */
    [[nodiscard]] double weighted_density_sup() const {
        double s = 0.0;
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            const auto& a = atoms_[k];
            const double centred = detail::std_weighted_sup(a, t_norm_[k], 1.0 / a.scale);
            s += a.weight * (1.0 + std::abs(a.location)) * centred;
        }
        return s;
    }

    double sample(RandomStream& rs) const {
        const ErrorAtom* a = &atoms_.front();
        if (atoms_.size() > 1) {
            double u = rs.uniform();
            for (const auto& c : atoms_) {
                a = &c;
                if (u < c.weight) break;
                u -= c.weight;
            }
        }
        return a->location + a->scale * std_draw(*a, rs);
    }

    [[nodiscard]] std::vector<double> sample(RandomStream& rs, std::size_t n) const {
        std::vector<double> out(n);
        for (auto& x : out) x = sample(rs);
        return out;
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        const auto& a = atoms_.front();
        if (!mixture_) {
            os << family_name(a.family);
            if (a.family == Family::student_t) os << "(df=" << a.df << ")";
            os << " location=" << a.location << " scale=" << a.scale;
            return os.str();
        }
        os << "mixture of " << family_name(a.family);
        if (a.family == Family::student_t) os << "(df=" << a.df << ")";
        for (const auto& c : atoms_) os << " [w=" << c.weight << " loc=" << c.location << " scale=" << c.scale << "]";
        return os.str();
    }

    /**
     * E[ g(|alpha + beta e|) ; sign restriction ] by quadrature.
     *
     * Per atom the argument is B(c + Z) with Z standardized; integrating over
     * t = |c + Z| puts the only singularity of g (at 0) on an endpoint and the
     * density peak at t = |c|.
     */
    template <typename G>
    quad::Result expect_abs(double alpha, double beta, const G& g, Side side,
                            double abs_tol = quad::kDefaultTolerance) const {
        quad::Result total;
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            const auto& a = atoms_[k];
            const double A = alpha + beta * a.location;
            const double B = beta * a.scale;
            if (B == 0.0) {
                const bool take = side == Side::both || (side == Side::plus && A > 0.0) ||
                                  (side == Side::minus && A < 0.0);
                if (take) total.value += a.weight * g(std::abs(A));
                continue;
            }
            const double c = A / B;
            const double kB = std::abs(B);
            // v = c + Z > 0 corresponds to sign(B) * (alpha + beta e) > 0.
            bool pos = true, neg = true;
            if (side == Side::plus) (B > 0.0 ? neg : pos) = false;
            if (side == Side::minus) (B > 0.0 ? pos : neg) = false;
            const double tn = t_norm_[k];
            auto h = [&](double t) {
                double dens = 0.0;
                if (pos) dens += detail::std_pdf(a, tn, t - c);
                if (neg) dens += detail::std_pdf(a, tn, -t - c);
                if (dens == 0.0) return 0.0;
                return g(kB * t) * dens;
            };
            const double ac = std::abs(c);
            const quad::Result piece = quad::integrate_half_line(
                h, {0.0, std::max(0.0, ac - detail::kBulkWidth), ac, ac + detail::kBulkWidth}, abs_tol);
            total.value += a.weight * piece.value;
            total.error += a.weight * piece.error;
        }
        return total;
    }

private:
    ErrorDist() = default;

    static ErrorDist single(ErrorAtom a) {
        if (!(a.scale > 0.0)) throw ConfigError(std::string(family_name(a.family)) + ": scale must be positive");
        if (!std::isfinite(a.location)) throw ConfigError("location must be finite");
        ErrorDist d;
        d.atoms_.push_back(a);
        d.finish();
        return d;
    }

    void finish() {
        t_norm_.clear();
        for (const auto& a : atoms_) t_norm_.push_back(a.family == Family::student_t ? detail::t_normalizer(a.df) : 0.0);
    }

    static double std_draw(const ErrorAtom& a, RandomStream& rs) {
        switch (a.family) {
            case Family::gaussian: return rs.normal();
            case Family::laplace: {
                const double e = -std::log(rs.uniform());
                return rs.uniform() < 0.5 ? -e : e;
            }
            case Family::student_t: {
                const double z = rs.normal();
                std::gamma_distribution<double> chi(0.5 * a.df, 2.0);
                return z / std::sqrt(chi(rs.engine()) / a.df);
            }
        }
        return 0.0;
    }

    std::vector<ErrorAtom> atoms_;
    std::vector<double> t_norm_;
    bool mixture_ = false;
};

// ---------------------------------------------------------------------------
// Moment oracles

inline void require_moment(const ErrorDist& d, double r) {
    if (!(r > 0.0)) throw DomainError("moment exponent must be positive");
    if (r > d.r0()) {
        std::ostringstream os;
        os << "E|e|^" << r << " is not finite for " << d.describe() << " (r0=" << d.r0() << ")";
        throw MomentError(os.str());
    }
}

/// E log|alpha + beta e| with its quadrature error estimate.
inline quad::Result log_abs_moment_result(const ErrorDist& d, double alpha, double beta,
                                          double abs_tol = quad::kDefaultTolerance) {
    if (alpha == 0.0 && beta == 0.0) throw DomainError("log_abs_moment: alpha = beta = 0");
    if (beta == 0.0) return {std::log(std::abs(alpha)), 0.0};
    return d.expect_abs(alpha, beta, [](double t) { return t > 0.0 ? std::log(t) : 0.0; }, Side::both, abs_tol);
}

inline double log_abs_moment(const ErrorDist& d, double alpha, double beta, double abs_tol = quad::kDefaultTolerance) {
    return log_abs_moment_result(d, alpha, beta, abs_tol).value;
}

/// E 0.5 log((alpha + beta e)^2 + s^2); equals log_abs_moment when s = 0.
inline double log_norm_moment(const ErrorDist& d, double alpha, double beta, double s,
                              double abs_tol = quad::kDefaultTolerance) {
    if (s == 0.0) return log_abs_moment(d, alpha, beta, abs_tol);
    const double s2 = s * s;
    return d.expect_abs(alpha, beta, [s2](double t) { return 0.5 * std::log(t * t + s2); }, Side::both, abs_tol).value;
}

/// P(alpha + beta e > 0) for Side::plus, P(alpha + beta e < 0) for Side::minus.
inline double sign_probability(const ErrorDist& d, double alpha, double beta, Side side) {
    if (side == Side::both) return 1.0;
    if (beta == 0.0) return (side == Side::plus ? alpha > 0.0 : alpha < 0.0) ? 1.0 : 0.0;
    const double c = -alpha / beta;
    const bool above = (beta > 0.0) == (side == Side::plus);  // event is e > c
    return above ? d.prob_above(c) : d.prob_below(c);
}

namespace detail {

// E|alpha + beta e|^r integrated directly in u, split at the sign change;
// independent of the |c + Z| parametrization used by expect_abs.
inline double abs_power_moment_u_space(const ErrorDist& d, double alpha, double beta, double r) {
    double total = 0.0;
    for (std::size_t k = 0; k < d.atoms().size(); ++k) {
        const auto& a = d.atoms()[k];
        const double tn = a.family == Family::student_t ? t_normalizer(a.df) : 0.0;
        auto f = [&](double u) {
            const double dens = std_pdf(a, tn, (u - a.location) / a.scale) / a.scale;
            return dens == 0.0 ? 0.0 : std::pow(std::abs(alpha + beta * u), r) * dens;
        };
        std::vector<double> cuts{a.location - kBulkWidth * a.scale, a.location, a.location + kBulkWidth * a.scale};
        if (beta != 0.0) cuts.push_back(-alpha / beta);
        total += a.weight * quad::integrate_real_line(f, cuts, 1e-12).value;
    }
    return total;
}

}  // namespace detail

/// E|alpha + beta e|^r.
inline double abs_power_moment(const ErrorDist& d, double alpha, double beta, double r,
                               double abs_tol = quad::kDefaultTolerance) {
    require_moment(d, r);
    if (alpha == 0.0 && beta == 0.0) return 0.0;
    return d.expect_abs(alpha, beta, [r](double t) { return std::pow(t, r); }, Side::both, abs_tol).value;
}

/// E|e|^r; closed form for centred atoms.
inline double abs_power_moment(const ErrorDist& d, double r) {
    require_moment(d, r);
    if (!d.symmetric()) return abs_power_moment(d, 0.0, 1.0, r);
    double s = 0.0;
    for (const auto& a : d.atoms()) s += a.weight * std::pow(a.scale, r) * detail::std_abs_moment(a, r);
    return s;
}

/**
 * E(|alpha + beta e|^r ; +-(alpha + beta e) > 0). The two sides are checked
 * against an independent full-line integral to 1e-8 relative.
 */
inline double partial_power_moment(const ErrorDist& d, double alpha, double beta, double r, Side side,
                                   double abs_tol = quad::kDefaultTolerance) {
    require_moment(d, r);
    if (side == Side::both) return abs_power_moment(d, alpha, beta, r, abs_tol);
    if (beta == 0.0) {
        const bool take = side == Side::plus ? alpha > 0.0 : alpha < 0.0;
        return take ? std::pow(std::abs(alpha), r) : 0.0;
    }
    auto g = [r](double t) { return std::pow(t, r); };
    const double tol = std::min(abs_tol, 1e-11);
    const double plus = d.expect_abs(alpha, beta, g, Side::plus, tol).value;
    const double minus = d.expect_abs(alpha, beta, g, Side::minus, tol).value;
    const double full = detail::abs_power_moment_u_space(d, alpha, beta, r);
    if (std::abs(plus + minus - full) > 1e-8 * std::max(full, 1e-300)) {
        std::ostringstream os;
        os.precision(17);
        os << "partial_power_moment: side split " << plus << " + " << minus << " disagrees with full integral " << full;
        throw QuadratureError(os.str());
    }
    return side == Side::plus ? plus : minus;
}

}  // namespace tarch
