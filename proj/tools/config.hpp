#pragma once

// JSON run configuration: model, errors, analysis and seed blocks.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarch/tarch.hpp"

namespace tarch::cli {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown key \"" + k + "\"");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
    return get_or<T>(j, key, T{}, where);
}

inline RegimeCoeffs parse_regime(const json& j, std::size_t p, const std::string& where) {
    check_keys(j, {"a0", "avec", "b0", "bvec"}, where);
    RegimeCoeffs rc;
    rc.a0 = get_or<double>(j, "a0", 0.0, where);
    rc.avec = get_or<std::vector<double>>(j, "avec", std::vector<double>(p, 0.0), where);
    rc.b0 = get_or<double>(j, "b0", 0.0, where);
    rc.bvec = require<std::vector<double>>(j, "bvec", where);
    return rc;
}

}  // namespace detail

/**
 * Model block. "type" selects a layout:
 *   general       p, hyperplanes (optional), regimes {"+-": {a0, avec, b0, bvec}, ...} or regime {...}
 *   arch          b, b0
 *   tar_arch1     a1, a2, b1, b2, a0, b0
 *   tarch_delay1  b1, b2, b10, b20
 */
inline ModelSpec parse_model(const json& j) {
    const std::string where = "model";
    if (!j.is_object()) throw ConfigError("model: expected an object");
    const std::string type = detail::get_or<std::string>(j, "type", "general", where);
    if (type == "arch") {
        detail::check_keys(j, {"type", "b", "b0"}, where);
        return models::arch(detail::require<std::vector<double>>(j, "b", where),
                            detail::get_or<double>(j, "b0", 1.0, where));
    }
    if (type == "tar_arch1") {
        detail::check_keys(j, {"type", "a1", "a2", "b1", "b2", "a0", "b0"}, where);
        return models::tar_arch1(detail::require<double>(j, "a1", where), detail::require<double>(j, "a2", where),
                                 detail::require<double>(j, "b1", where), detail::require<double>(j, "b2", where),
                                 detail::get_or<double>(j, "a0", 0.0, where), detail::get_or<double>(j, "b0", 1.0, where));
    }
    if (type == "tarch_delay1") {
        detail::check_keys(j, {"type", "b1", "b2", "b10", "b20"}, where);
        return models::tarch_delay1(detail::require<std::vector<double>>(j, "b1", where),
                                    detail::require<std::vector<double>>(j, "b2", where),
                                    detail::get_or<double>(j, "b10", 1.0, where),
                                    detail::get_or<double>(j, "b20", 1.0, where));
    }
    if (type != "general") throw ConfigError("model.type: unknown model type \"" + type + "\"");
    detail::check_keys(j, {"type", "p", "hyperplanes", "regimes", "regime"}, where);
    const auto p = detail::require<std::size_t>(j, "p", where);
    auto planes = detail::get_or<std::vector<std::vector<double>>>(j, "hyperplanes", {}, where);
    for (const auto& h : planes)
        if (h.size() != p) throw ConfigError("model.hyperplanes: every normal must have length p");
    if (j.contains("regime") == j.contains("regimes"))
        throw ConfigError("model: give exactly one of \"regime\" (single regime) or \"regimes\"");
    std::map<std::string, RegimeCoeffs> regimes;
    if (j.contains("regime")) {
        if (!planes.empty()) throw ConfigError("model: \"regime\" is only for models without hyperplanes");
        regimes[""] = detail::parse_regime(j.at("regime"), p, "model.regime");
    } else {
        const json& r = j.at("regimes");
        if (!r.is_object()) throw ConfigError("model.regimes: expected an object keyed by sign pattern");
        for (const auto& [k, v] : r.items()) regimes[k] = detail::parse_regime(v, p, "model.regimes." + k);
    }
    return ModelSpec(p, std::move(planes), regimes);
}

inline ErrorDist parse_single_error(const json& j, const std::string& where) {
    const std::string fam = detail::require<std::string>(j, "family", where);
    if (fam == "gaussian") {
        detail::check_keys(j, {"family", "sd", "location"}, where);
        return ErrorDist::gaussian(detail::get_or<double>(j, "sd", 1.0, where),
                                   detail::get_or<double>(j, "location", 0.0, where));
    }
    if (fam == "laplace") {
        detail::check_keys(j, {"family", "scale", "location"}, where);
        return ErrorDist::laplace(detail::get_or<double>(j, "scale", std::numbers::sqrt2 / 2.0, where),
                                  detail::get_or<double>(j, "location", 0.0, where));
    }
    if (fam == "student_t") {
        detail::check_keys(j, {"family", "df", "scale", "location"}, where);
        return ErrorDist::student_t(detail::require<double>(j, "df", where), detail::get_or<double>(j, "scale", 1.0, where),
                                    detail::get_or<double>(j, "location", 0.0, where));
    }
    throw ConfigError(where + ".family: unknown family \"" + fam + "\"");
}

/// Errors block: a single family, or {"family": "mixture", "base": {...}, "components": [{weight, scale}, ...]}.
inline ErrorDist parse_errors(const json& j) {
    if (!j.is_object()) throw ConfigError("errors: expected an object");
    if (detail::get_or<std::string>(j, "family", "", "errors") != "mixture") return parse_single_error(j, "errors");
    detail::check_keys(j, {"family", "base", "components"}, "errors");
    const ErrorDist base = parse_single_error(detail::require<json>(j, "base", "errors"), "errors.base");
    std::vector<MixtureComponent> comps;
    const json cs = detail::require<json>(j, "components", "errors");
    if (!cs.is_array()) throw ConfigError("errors.components: expected an array");
    for (const auto& c : cs) {
        detail::check_keys(c, {"weight", "scale"}, "errors.components");
        comps.push_back({detail::require<double>(c, "weight", "errors.components"),
                         detail::require<double>(c, "scale", "errors.components")});
    }
    return ErrorDist::mixture(base, comps);
}

struct CheckParams {
    AssumptionCheckOptions opt;
};

struct LyapunovParams {
    std::uint64_t n_steps = 1000000;
    std::uint64_t burn_in = 10000;
    std::size_t batches = 50;
    std::size_t replicates = 1;
    std::uint64_t trace_every = 10000;
};

struct MomentsParams {
    double r = 2.0;
    GrowthOptions growth;
    bool lambda = false;
    std::size_t lambda_grid = 64;
    std::size_t lambda_particles = 2000;
    std::size_t probes = 32;
    std::size_t inner_samples = 20000;
};

struct KappaParams {
    double lo = 0.5;
    double hi = 4.0;
    double tol = 0.05;
    GrowthOptions growth;
    std::uint64_t lyap_steps = 200000;
};

struct Order1Params {
    double r = 2.0;
};

struct CrosscheckParams {
    std::uint64_t n_steps = 1000000;
    std::uint64_t burn_in = 10000;
    std::uint64_t gamma_steps = 1000000;
    std::size_t gamma_replicates = 1;
    std::vector<double> radii = {1.0, 1e4, 1e8};
    std::vector<std::uint64_t> drift_n = {10, 20};
    std::size_t drift_replicates = 100000;
};

struct SimulateParams {
    std::vector<double> x0;
    std::uint64_t n = 1000;
};

struct RunConfig {
    json raw;
    ModelSpec model;
    ErrorDist errors = ErrorDist::gaussian();
    std::uint64_t seed = 1;
    CheckParams check;
    LyapunovParams lyapunov;
    MomentsParams moments;
    KappaParams kappa;
    Order1Params order1;
    CrosscheckParams crosscheck;
    SimulateParams simulate;
};

namespace detail {

inline void parse_growth(const json& j, GrowthOptions& g, const std::string& where) {
    g.n_max = get_or<std::size_t>(j, "n_max", g.n_max, where);
    g.groups = get_or<std::size_t>(j, "groups", g.groups, where);
    g.particles = get_or<std::size_t>(j, "particles", g.particles, where);
    g.grid_points = get_or<std::size_t>(j, "grid_points", g.grid_points, where);
    g.stationary_starts = get_or<std::size_t>(j, "stationary_starts", g.stationary_starts, where);
    g.delta = get_or<double>(j, "delta", g.delta, where);
    if (g.n_max < 20) throw ConfigError(where + ".n_max: must be at least 20");
}

}  // namespace detail

inline void parse_analysis(const json& j, RunConfig& rc) {
    using namespace detail;
    check_keys(j, {"check", "lyapunov", "moments", "kappa", "order1", "crosscheck", "simulate"}, "analysis");
    if (j.contains("check")) {
        const json& c = j.at("check");
        check_keys(c, {"grid_points", "axial_band", "threshold"}, "analysis.check");
        auto& o = rc.check.opt;
        o.grid_points = get_or<std::size_t>(c, "grid_points", o.grid_points, "analysis.check");
        o.axial_band = get_or<double>(c, "axial_band", o.axial_band, "analysis.check");
        o.threshold = get_or<double>(c, "threshold", o.threshold, "analysis.check");
    }
    if (j.contains("lyapunov")) {
        const json& c = j.at("lyapunov");
        const std::string w = "analysis.lyapunov";
        check_keys(c, {"n_steps", "burn_in", "batches", "replicates", "trace_every"}, w);
        auto& o = rc.lyapunov;
        o.n_steps = get_or<std::uint64_t>(c, "n_steps", o.n_steps, w);
        o.burn_in = get_or<std::uint64_t>(c, "burn_in", o.burn_in, w);
        o.batches = get_or<std::size_t>(c, "batches", o.batches, w);
        o.replicates = get_or<std::size_t>(c, "replicates", o.replicates, w);
        o.trace_every = get_or<std::uint64_t>(c, "trace_every", o.trace_every, w);
    }
    if (j.contains("moments")) {
        const json& c = j.at("moments");
        const std::string w = "analysis.moments";
        check_keys(c, {"r", "n_max", "groups", "particles", "grid_points", "stationary_starts", "delta", "lambda",
                       "lambda_grid", "lambda_particles", "probes", "inner_samples"},
                   w);
        auto& o = rc.moments;
        o.r = get_or<double>(c, "r", o.r, w);
        parse_growth(c, o.growth, w);
        o.lambda = get_or<bool>(c, "lambda", o.lambda, w);
        o.lambda_grid = get_or<std::size_t>(c, "lambda_grid", o.lambda_grid, w);
        o.lambda_particles = get_or<std::size_t>(c, "lambda_particles", o.lambda_particles, w);
        o.probes = get_or<std::size_t>(c, "probes", o.probes, w);
        o.inner_samples = get_or<std::size_t>(c, "inner_samples", o.inner_samples, w);
    }
    if (j.contains("kappa")) {
        const json& c = j.at("kappa");
        const std::string w = "analysis.kappa";
        check_keys(c, {"bracket", "tol", "n_max", "groups", "particles", "grid_points", "stationary_starts", "lyap_steps"},
                   w);
        auto& o = rc.kappa;
        if (c.contains("bracket")) {
            const auto br = get_or<std::vector<double>>(c, "bracket", {}, w);
            if (br.size() != 2) throw ConfigError(w + ".bracket: expected [lo, hi]");
            o.lo = br[0];
            o.hi = br[1];
        }
        o.tol = get_or<double>(c, "tol", o.tol, w);
        parse_growth(c, o.growth, w);
        o.lyap_steps = get_or<std::uint64_t>(c, "lyap_steps", o.lyap_steps, w);
    }
    if (j.contains("order1")) {
        const json& c = j.at("order1");
        check_keys(c, {"r"}, "analysis.order1");
        rc.order1.r = get_or<double>(c, "r", rc.order1.r, "analysis.order1");
    }
    if (j.contains("crosscheck")) {
        const json& c = j.at("crosscheck");
        const std::string w = "analysis.crosscheck";
        check_keys(c, {"n_steps", "burn_in", "gamma_steps", "gamma_replicates", "radii", "drift_n", "drift_replicates"}, w);
        auto& o = rc.crosscheck;
        o.n_steps = get_or<std::uint64_t>(c, "n_steps", o.n_steps, w);
        o.burn_in = get_or<std::uint64_t>(c, "burn_in", o.burn_in, w);
        o.gamma_steps = get_or<std::uint64_t>(c, "gamma_steps", o.gamma_steps, w);
        o.gamma_replicates = get_or<std::size_t>(c, "gamma_replicates", o.gamma_replicates, w);
        o.radii = get_or<std::vector<double>>(c, "radii", o.radii, w);
        o.drift_n = get_or<std::vector<std::uint64_t>>(c, "drift_n", o.drift_n, w);
        o.drift_replicates = get_or<std::size_t>(c, "drift_replicates", o.drift_replicates, w);
        if (o.radii.empty() || o.drift_n.empty()) throw ConfigError(w + ": radii and drift_n must be nonempty");
    }
    if (j.contains("simulate")) {
        const json& c = j.at("simulate");
        check_keys(c, {"x0", "n"}, "analysis.simulate");
        rc.simulate.x0 = get_or<std::vector<double>>(c, "x0", rc.simulate.x0, "analysis.simulate");
        rc.simulate.n = get_or<std::uint64_t>(c, "n", rc.simulate.n, "analysis.simulate");
    }
}

inline RunConfig parse_config(const json& j) {
    detail::check_keys(j, {"model", "errors", "analysis", "seed"}, "config");
    RunConfig rc;
    rc.raw = j;
    if (!j.contains("model")) throw ConfigError("config: missing \"model\" block");
    rc.model = parse_model(j.at("model"));
    rc.errors = j.contains("errors") ? parse_errors(j.at("errors")) : ErrorDist::gaussian();
    rc.seed = detail::get_or<std::uint64_t>(j, "seed", rc.seed, "config");
    // p = 1 moment estimates need large populations: |b u|^r is heavy tailed for large r.
    if (rc.model.p() == 1) rc.kappa.growth.particles = 12500;
    if (j.contains("analysis")) parse_analysis(j.at("analysis"), rc);
    if (rc.simulate.x0.empty()) rc.simulate.x0.assign(rc.model.p(), 0.0);
    if (rc.simulate.x0.size() != rc.model.p()) throw ConfigError("analysis.simulate.x0: must have length p");
    return rc;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace tarch::cli
