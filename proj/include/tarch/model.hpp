#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tarch/error_dist.hpp"
#include "tarch/exceptions.hpp"
#include "tarch/rng.hpp"
#include "tarch/sphere_grid.hpp"

namespace tarch {

/// Coefficients of one regime: a(x) = a0 + avec.x, b(x) = sqrt(b0^2 + sum bvec_i^2 x_i^2).
struct RegimeCoeffs {
    double a0 = 0.0;
    std::vector<double> avec;
    double b0 = 0.0;
    std::vector<double> bvec;

    friend bool operator==(const RegimeCoeffs&, const RegimeCoeffs&) = default;
};

/// Sign pattern of x relative to the hyperplanes: bit j is set when h_j.x < 0 (zero counts as +).
using Pattern = std::uint32_t;

inline constexpr std::size_t kMaxHyperplanes = 16;

/**
 * @brief Threshold AR-ARCH(p) model with homogeneous threshold hyperplanes.
 *
 * Regimes are keyed by sign pattern. Patterns the state can never reach may
 * be left out; the set of reachable patterns is found by dense sampling of the
 * sphere when the model is built, and a lookup that still hits a missing
 * pattern throws ConfigError.
 */
class ModelSpec {
public:
    ModelSpec() = default;

    ModelSpec(std::size_t p, std::vector<std::vector<double>> hyperplanes, const std::map<Pattern, RegimeCoeffs>& regimes)
        : p_(p), planes_(std::move(hyperplanes)) {
        if (p_ == 0) throw ConfigError("model: p must be at least 1");
        if (planes_.size() > kMaxHyperplanes) throw ConfigError("model: at most 16 hyperplanes are supported");
        for (auto& h : planes_) normalize_plane(h);
        table_.assign(std::size_t{1} << planes_.size(), std::nullopt);
        for (const auto& [pat, rc] : regimes) {
            if (pat >= table_.size()) throw ConfigError("model: regime pattern out of range");
            validate_regime(rc);
            table_[pat] = rc;
        }
        find_attainable();
        for (Pattern pat : attainable_)
            if (!table_[pat]) throw ConfigError("model: no regime for attainable sign pattern \"" + pattern_string(pat) + "\"");
    }

    /// Regimes keyed by strings of '+'/'-', one character per hyperplane.
    ModelSpec(std::size_t p, std::vector<std::vector<double>> hyperplanes,
              const std::map<std::string, RegimeCoeffs>& regimes)
        : ModelSpec(p, hyperplanes, to_pattern_map(hyperplanes.size(), regimes)) {}

    /// Single global regime (m = 0).
    static ModelSpec single(const RegimeCoeffs& rc) {
        return ModelSpec(rc.avec.size(), {}, std::map<Pattern, RegimeCoeffs>{{0u, rc}});
    }

    [[nodiscard]] std::size_t p() const noexcept { return p_; }
    [[nodiscard]] std::size_t m() const noexcept { return planes_.size(); }
    [[nodiscard]] const std::vector<std::vector<double>>& hyperplanes() const noexcept { return planes_; }
    [[nodiscard]] const std::vector<Pattern>& attainable_patterns() const noexcept { return attainable_; }

    [[nodiscard]] Pattern pattern_of(std::span<const double> x) const noexcept {
        Pattern pat = 0;
        for (std::size_t j = 0; j < planes_.size(); ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < p_; ++k) dot += planes_[j][k] * x[k];
            if (dot < 0.0) pat |= Pattern{1} << j;
        }
        return pat;
    }

    [[nodiscard]] const RegimeCoeffs* regime_for_pattern(Pattern pat) const noexcept {
        return pat < table_.size() && table_[pat] ? &*table_[pat] : nullptr;
    }

    [[nodiscard]] const RegimeCoeffs& regime_at(std::span<const double> x) const {
        const Pattern pat = pattern_of(x);
        const RegimeCoeffs* rc = regime_for_pattern(pat);
        if (!rc) throw ConfigError("model: state reached sign pattern \"" + pattern_string(pat) + "\" with no regime");
        return *rc;
    }

    [[nodiscard]] std::string pattern_string(Pattern pat) const {
        std::string s(planes_.size(), '+');
        for (std::size_t j = 0; j < planes_.size(); ++j)
            if (pat & (Pattern{1} << j)) s[j] = '-';
        return s;
    }

    /// Distinct regimes present in the table, in pattern order.
    [[nodiscard]] std::vector<std::pair<Pattern, RegimeCoeffs>> regimes() const {
        std::vector<std::pair<Pattern, RegimeCoeffs>> out;
        for (Pattern pat = 0; pat < table_.size(); ++pat)
            if (table_[pat]) out.emplace_back(pat, *table_[pat]);
        return out;
    }

    /// Copy with every regime's intercepts replaced; the homogeneous part is untouched.
    [[nodiscard]] ModelSpec with_intercepts(double a0, double b0) const {
        ModelSpec out = *this;
        for (auto& e : out.table_)
            if (e) {
                e->a0 = a0;
                e->b0 = b0;
            }
        return out;
    }

    /// Copy with every ARCH coefficient multiplied by c.
    [[nodiscard]] ModelSpec with_scaled_b(double c) const {
        ModelSpec out = *this;
        for (auto& e : out.table_)
            if (e)
                for (auto& b : e->bvec) b *= c;
        return out;
    }

    /// True when every reachable regime has a = 0 and the same bvec (the ARCH(p) family).
    [[nodiscard]] bool is_pure_arch() const {
        const RegimeCoeffs* first = nullptr;
        for (Pattern pat : attainable_) {
            const RegimeCoeffs& rc = *table_[pat];
            if (rc.a0 != 0.0) return false;
            for (double a : rc.avec)
                if (a != 0.0) return false;
            if (!first)
                first = &rc;
            else if (rc.bvec != first->bvec)
                return false;
        }
        return first != nullptr;
    }

    /// ARCH coefficients shared by all regimes; only meaningful when is_pure_arch().
    [[nodiscard]] std::vector<double> arch_coefficients() const {
        return attainable_.empty() ? std::vector<double>{} : table_[attainable_.front()]->bvec;
    }

private:
    static std::map<Pattern, RegimeCoeffs> to_pattern_map(std::size_t m, const std::map<std::string, RegimeCoeffs>& in) {
        std::map<Pattern, RegimeCoeffs> out;
        for (const auto& [key, rc] : in) {
            if (key.size() != m)
                throw ConfigError("model: regime key \"" + key + "\" must have one sign per hyperplane (" +
                                  std::to_string(m) + ")");
            Pattern pat = 0;
            for (std::size_t j = 0; j < m; ++j) {
                if (key[j] == '-')
                    pat |= Pattern{1} << j;
                else if (key[j] != '+')
                    throw ConfigError("model: regime key \"" + key + "\" may only contain '+' and '-'");
            }
            if (!out.emplace(pat, rc).second) throw ConfigError("model: duplicate regime key \"" + key + "\"");
        }
        return out;
    }

    void normalize_plane(std::vector<double>& h) const {
        if (h.size() != p_) throw ConfigError("model: hyperplane normal must have p coordinates");
        auto it = std::find_if(h.begin(), h.end(), [](double v) { return v != 0.0; });
        if (it == h.end()) throw ConfigError("model: hyperplane normal must be nonzero");
        if (*it < 0.0)
            throw ConfigError("model: hyperplane normal must have a positive first nonzero coordinate "
                              "(flip its sign and swap the corresponding regime signs)");
        const double s = *it;
        for (auto& v : h) {
            if (!std::isfinite(v)) throw ConfigError("model: hyperplane coordinates must be finite");
            v /= s;
        }
    }

    void validate_regime(const RegimeCoeffs& rc) const {
        if (rc.avec.size() != p_ || rc.bvec.size() != p_)
            throw ConfigError("model: avec and bvec must have p = " + std::to_string(p_) + " entries");
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(rc.a0) || !finite(rc.b0) || !std::all_of(rc.avec.begin(), rc.avec.end(), finite) ||
            !std::all_of(rc.bvec.begin(), rc.bvec.end(), finite))
            throw ConfigError("model: coefficients must be finite");
        if (rc.b0 < 0.0 || std::any_of(rc.bvec.begin(), rc.bvec.end(), [](double b) { return b < 0.0; }))
            throw ConfigError("model: b0 and bvec must be nonnegative");
    }

    void find_attainable() {
        std::vector<bool> seen(table_.size(), false);
        auto mark = [&](std::span<const double> x) { seen[pattern_of(x)] = true; };
        if (planes_.empty()) {
            seen[0] = true;
        } else if (p_ == 1) {
            mark(std::vector<double>{1.0});
            mark(std::vector<double>{-1.0});
        } else {
            // Each full-dimensional cone of the arrangement has positive surface measure;
            // a dense uniform sample plus the low-discrepancy grid finds all but hair-thin cones.
            RandomStream rs(0x7A4C11ULL);
            const std::size_t n = 20000 + 2000 * planes_.size();
            for (std::size_t i = 0; i < n; ++i) mark(rs.sphere_point(p_));
            for (std::size_t i = 0; i < 4096; ++i) mark(sphere_sequence_point(p_, i));
        }
        attainable_.clear();
        for (Pattern pat = 0; pat < seen.size(); ++pat)
            if (seen[pat]) attainable_.push_back(pat);
    }

    std::size_t p_ = 0;
    std::vector<std::vector<double>> planes_;
    std::vector<std::optional<RegimeCoeffs>> table_;
    std::vector<Pattern> attainable_;
};

/// Unit vector on the sphere, renormalized on construction.
struct SphereState {
    std::vector<double> theta;

    SphereState() = default;
    explicit SphereState(std::vector<double> v) : theta(std::move(v)) {
        double n2 = 0.0;
        for (double x : theta) n2 += x * x;
        if (!(n2 > 0.0) || !std::isfinite(n2)) throw DomainError("SphereState: vector must be nonzero and finite");
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& x : theta) x *= inv;
    }

    [[nodiscard]] std::size_t p() const noexcept { return theta.size(); }
    [[nodiscard]] double norm_error() const noexcept {
        double n2 = 0.0;
        for (double x : theta) n2 += x * x;
        return std::abs(std::sqrt(n2) - 1.0);
    }
};

struct AB {
    double a = 0.0;
    double b = 0.0;
};

/// Full conditional mean and scale at state x.
inline AB eval_ab(const ModelSpec& spec, std::span<const double> x) {
    const RegimeCoeffs& rc = spec.regime_at(x);
    AB out{rc.a0, 0.0};
    double b2 = rc.b0 * rc.b0;
    for (std::size_t k = 0; k < spec.p(); ++k) {
        out.a += rc.avec[k] * x[k];
        b2 += rc.bvec[k] * rc.bvec[k] * x[k] * x[k];
    }
    out.b = std::sqrt(b2);
    return out;
}

/// Homogeneous parts a*(x), b*(x): intercepts dropped.
inline AB eval_ab_star(const ModelSpec& spec, std::span<const double> x) {
    const RegimeCoeffs& rc = spec.regime_at(x);
    AB out;
    double b2 = 0.0;
    for (std::size_t k = 0; k < spec.p(); ++k) {
        out.a += rc.avec[k] * x[k];
        b2 += rc.bvec[k] * rc.bvec[k] * x[k] * x[k];
    }
    out.b = std::sqrt(b2);
    return out;
}

inline double eval_z(const ModelSpec& spec, std::span<const double> theta, double u) {
    const AB h = eval_ab_star(spec, theta);
    return h.a + h.b * u;
}

/// Squared norm of the trailing part (theta_1, ..., theta_{p-1}) that shifts into the next state.
inline double trailing_norm2(std::span<const double> theta) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < theta.size(); ++k) s += theta[k] * theta[k];
    return s;
}

inline double eval_w(const ModelSpec& spec, std::span<const double> theta, double u) {
    const double z = eval_z(spec, theta, u);
    return std::sqrt(z * z + trailing_norm2(theta));
}

inline double eval_z(const ModelSpec& spec, const SphereState& s, double u) { return eval_z(spec, s.theta, u); }
inline double eval_w(const ModelSpec& spec, const SphereState& s, double u) { return eval_w(spec, s.theta, u); }

/// Bounded-coefficient representation at a single state.
struct FcarCoeffs {
    std::vector<double> a;  // a_0 .. a_p
    std::vector<double> b;  // b_0 .. b_p (b_i >= 0)
};

/**
 * a_0 = a(x)/(1 + sum|x_i|), a_i = sgn(x_i) a(x)/(1 + sum|x_i|);
 * b_0^2 = b_i^2 = b(x)^2/(1 + sum x_i^2). Both are bounded under linear growth
 * and reproduce a(x) and b(x) exactly.
 */
inline FcarCoeffs fcar_representation(const ModelSpec& spec, std::span<const double> x) {
    const AB ab = eval_ab(spec, x);
    const std::size_t p = spec.p();
    double l1 = 0.0, l2 = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
        l1 += std::abs(x[k]);
        l2 += x[k] * x[k];
    }
    FcarCoeffs out;
    out.a.resize(p + 1);
    out.b.resize(p + 1);
    out.a[0] = ab.a / (1.0 + l1);
    const double bc = ab.b / std::sqrt(1.0 + l2);
    out.b[0] = bc;
    for (std::size_t k = 0; k < p; ++k) {
        const double sg = x[k] > 0.0 ? 1.0 : (x[k] < 0.0 ? -1.0 : 0.0);
        out.a[k + 1] = sg * out.a[0];
        out.b[k + 1] = bc;
    }
    return out;
}

inline double fcar_reconstruct_a(const FcarCoeffs& c, std::span<const double> x) {
    double a = c.a[0];
    for (std::size_t k = 0; k < x.size(); ++k) a += c.a[k + 1] * x[k];
    return a;
}

inline double fcar_reconstruct_b(const FcarCoeffs& c, std::span<const double> x) {
    double b2 = c.b[0] * c.b[0];
    for (std::size_t k = 0; k < x.size(); ++k) b2 += c.b[k + 1] * c.b[k + 1] * x[k] * x[k];
    return std::sqrt(b2);
}

// ---------------------------------------------------------------------------
// Assumption checks

enum class CheckStatus { pass, fail, not_checkable };

inline const char* status_name(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::not_checkable: return "not-checkable-numerically";
    }
    return "?";
}

struct AssumptionEntry {
    std::string id;
    CheckStatus status = CheckStatus::pass;
    bool numerical_evidence = false;  // grid-based, not a proof
    std::string evidence;
    std::vector<std::string> warnings;
};

struct AssumptionReport {
    std::vector<AssumptionEntry> entries;

    [[nodiscard]] bool all_pass() const {
        return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.status != CheckStatus::fail; });
    }
    [[nodiscard]] const AssumptionEntry& get(const std::string& id) const {
        for (const auto& e : entries)
            if (e.id == id) return e;
        throw std::out_of_range("no assumption entry " + id);
    }
};

struct AssumptionCheckOptions {
    std::size_t grid_points = 10000;
    double axial_band = 1e-3;
    double threshold = 1e-9;
};

inline AssumptionReport check_assumptions(const ModelSpec& spec, const ErrorDist& dist,
                                          const AssumptionCheckOptions& opt = {}) {
    AssumptionReport rep;
    const std::size_t p = spec.p();
    auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(6);
        os << v;
        return os.str();
    };

    {
        AssumptionEntry e;
        e.id = "A.1";
        std::vector<std::string> bad;
        for (Pattern pat : spec.attainable_patterns()) {
            const RegimeCoeffs& rc = *spec.regime_for_pattern(pat);
            const bool bvec_pos = std::all_of(rc.bvec.begin(), rc.bvec.end(), [](double b) { return b > 0.0; });
            if (rc.b0 > 0.0) continue;
            const std::string name = spec.m() ? "regime \"" + spec.pattern_string(pat) + "\"" : "the regime";
            if (bvec_pos)
                e.warnings.push_back(name + " has b0 = 0, so b vanishes at the origin");
            else
                bad.push_back(name);
        }
        if (bad.empty()) {
            e.evidence = dist.describe() + " has a positive continuous density on R; b is bounded away from 0 on every regime";
        } else {
            e.status = CheckStatus::fail;
            e.evidence = "b is not bounded away from 0: b0 = 0 and some ARCH coefficient is 0 in ";
            for (std::size_t i = 0; i < bad.size(); ++i) e.evidence += (i ? ", " : "") + bad[i];
        }
        rep.entries.push_back(std::move(e));
    }
    {
        AssumptionEntry e;
        e.id = "A.2";
        const double sup = dist.weighted_density_sup();
        if (std::isfinite(sup) && dist.r0() > 0.0) {
            e.evidence = "sup (1+|u|) f(u) <= " + fmt(sup) + "; E|e|^r finite for r <= " + fmt(dist.r0());
        } else {
            e.status = CheckStatus::fail;
            e.evidence = "weighted density bound or moment exponent not finite";
        }
        rep.entries.push_back(std::move(e));
    }
    rep.entries.push_back({"A.3", CheckStatus::pass, false, "implied by A.4", {}});
    rep.entries.push_back(
        {"A.4", CheckStatus::pass, false, "piecewise-linear a and piecewise-quadratic b^2 are asymptotically homogeneous", {}});

    {
        AssumptionEntry e;
        e.id = "A.5";
        if (p == 1) {
            e.evidence = "only required for p > 1";
        } else {
            e.numerical_evidence = true;
            const auto grid = sphere_grid_excluding(p, opt.grid_points, opt.axial_band, {}, true);
            double min_max_ab = INFINITY, min_b = INFINITY;
            for (const auto& th : grid) {
                const AB h = eval_ab_star(spec, th);
                min_max_ab = std::min(min_max_ab, std::max(std::abs(h.a), h.b));
                min_b = std::min(min_b, h.b);
            }
            e.evidence = std::to_string(grid.size()) + " sphere points off the axial band " + fmt(opt.axial_band) +
                         ": min max(|a*|, b*) = " + fmt(min_max_ab) + ", min b* = " + fmt(min_b);
            if (!(min_max_ab > opt.threshold) || !(min_b > opt.threshold)) e.status = CheckStatus::fail;
            // On the axial set b* may vanish; report where.
            for (std::size_t axis = 0; axis < p; ++axis) {
                double zero_b = 0, zero_both = 0, total = 0;
                for (std::size_t i = 0; i < 512; ++i) {
                    auto q = sphere_sequence_point(p - 1, i);
                    std::vector<double> th;
                    th.reserve(p);
                    for (std::size_t k = 0, j = 0; k < p; ++k) th.push_back(k == axis ? 0.0 : q[j++]);
                    const AB h = eval_ab_star(spec, th);
                    total += 1;
                    if (h.b <= opt.threshold) ++zero_b;
                    if (std::max(std::abs(h.a), h.b) <= opt.threshold) ++zero_both;
                }
                if (zero_b > 0)
                    e.warnings.push_back("b* = 0 at " + fmt(100.0 * zero_b / total) + "% of probes on {theta_" +
                                         std::to_string(axis + 1) + " = 0}");
                if (zero_both > 0)
                    e.warnings.push_back("max(|a*|, b*) = 0 at " + fmt(100.0 * zero_both / total) +
                                         "% of probes on {theta_" + std::to_string(axis + 1) + " = 0}");
            }
        }
        rep.entries.push_back(std::move(e));
    }
    rep.entries.push_back({"A.6", CheckStatus::pass, false,
                           std::to_string(spec.m()) + " homogeneous hyperplanes; a*, b* are continuous within each regime",
                           {}});
    return rep;
}

namespace models {

/// ARCH(p): xi_t = sqrt(b0^2 + sum b_i^2 xi_{t-i}^2) e_t.
inline ModelSpec arch(const std::vector<double>& b, double b0 = 1.0) {
    return ModelSpec::single({0.0, std::vector<double>(b.size(), 0.0), b0, b});
}

/**
 * First-order threshold AR-ARCH with the threshold at 0: coefficients
 * (a1, b1) when x < 0 and (a2, b2) when x >= 0, intercepts a0, b0 in both.
 */
inline ModelSpec tar_arch1(double a1, double a2, double b1, double b2, double a0 = 0.0, double b0 = 1.0) {
    return ModelSpec(1, {{1.0}},
                     std::map<std::string, RegimeCoeffs>{{"-", {a0, {a1}, b0, {b1}}}, {"+", {a0, {a2}, b0, {b2}}}});
}

/// TARCH(p) with delay 1: ARCH coefficients b1 when x_1 < 0 and b2 otherwise.
inline ModelSpec tarch_delay1(const std::vector<double>& b1, const std::vector<double>& b2, double b10 = 1.0,
                              double b20 = 1.0) {
    if (b1.size() != b2.size() || b1.empty()) throw ConfigError("tarch_delay1: coefficient vectors must match");
    const std::size_t p = b1.size();
    std::vector<double> h(p, 0.0);
    h[0] = 1.0;
    const std::vector<double> zero(p, 0.0);
    return ModelSpec(p, {h},
                     std::map<std::string, RegimeCoeffs>{{"-", {0.0, zero, b10, b1}}, {"+", {0.0, zero, b20, b2}}});
}

}  // namespace models

}  // namespace tarch
