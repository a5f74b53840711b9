#pragma once

// Command implementations behind the tarch CLI. Each returns a JSON report, an
// exit code and any side files; the driver only handles I/O.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "report.hpp"

namespace tarch::cli {

enum ExitCode : int { kDefinitive = 0, kNegative = 1, kUsage = 2, kInconclusive = 3 };

struct RunOptions {
    unsigned threads = 1;
    bool force = false;
};

struct CommandResult {
    ojson report;
    int exit_code = kDefinitive;
    std::vector<std::pair<std::string, std::string>> files;  // (file name, contents)
    std::string primary_text;                                  // replaces JSON on stdout when set
};

namespace detail {

inline ojson header(const std::string& command, const RunConfig& rc) {
    ojson j;
    j["command"] = command;
    j["seed"] = rc.seed;
    j["config"] = ojson::parse(rc.raw.dump());
    j["model"] = to_json(rc.model);
    j["errors"] = rc.errors.describe();
    return j;
}

// Returns true when the run may proceed; otherwise fills the result with the failing report.
inline bool assumptions_gate(const RunConfig& rc, const RunOptions& opt, CommandResult& res) {
    const AssumptionReport rep = check_assumptions(rc.model, rc.errors, rc.check.opt);
    res.report["assumptions"] = to_json(rep);
    if (rep.all_pass() || opt.force) return true;
    res.report["error"] = "assumptions failed; rerun with --force to analyse anyway";
    res.exit_code = kNegative;
    return false;
}

struct Agreement {
    std::string a, b;
    double diff = 0.0;
    double combined_se = 0.0;
    bool agree = false;
};

inline Agreement agreement(const std::string& a, double va, double sa, const std::string& b, double vb, double sb,
                           double n_sigma = 4.0) {
    Agreement g{a, b, va - vb, std::hypot(sa, sb), false};
    g.agree = std::abs(g.diff) <= n_sigma * g.combined_se;
    return g;
}

inline std::optional<std::pair<std::vector<double>, std::vector<double>>> delay1_coefficients(const ModelSpec& spec) {
    if (spec.m() != 1 || spec.p() < 2) return std::nullopt;
    const auto& h = spec.hyperplanes().front();
    for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i] != 0.0) return std::nullopt;
    std::vector<double> b1, b2;
    for (const auto& [pat, rc] : spec.regimes()) {
        for (double a : rc.avec)
            if (a != 0.0) return std::nullopt;
        (pat == 1 ? b1 : b2) = rc.bvec;
    }
    if (b1.empty() || b2.empty()) return std::nullopt;
    return std::make_pair(b1, b2);
}

struct Order1Coeffs {
    double a1, a2, b1, b2;
};

inline std::optional<Order1Coeffs> order1_coefficients(const ModelSpec& spec) {
    if (spec.p() != 1 || spec.m() > 1) return std::nullopt;
    const std::vector<double> minus{-1.0}, plus{1.0};
    const RegimeCoeffs& rm = spec.regime_at(minus);
    const RegimeCoeffs& rp = spec.regime_at(plus);
    return Order1Coeffs{rm.avec[0], rp.avec[0], rm.bvec[0], rp.bvec[0]};
}

inline std::pair<std::vector<double>, std::vector<double>> coefficient_bounds(const ModelSpec& spec) {
    std::vector<double> a(spec.p(), 0.0), b(spec.p(), 0.0);
    for (const auto& [pat, rc] : spec.regimes())
        for (std::size_t i = 0; i < spec.p(); ++i) {
            a[i] = std::max(a[i], std::abs(rc.avec[i]));
            b[i] = std::max(b[i], rc.bvec[i]);
        }
    return {a, b};
}

inline std::string stability_name(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::geometrically_ergodic: return "geometrically-ergodic";
        case StabilityVerdict::transient: return "transient";
        case StabilityVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

}  // namespace detail

inline CommandResult cmd_check(const RunConfig& rc, const RunOptions&) {
    CommandResult res;
    res.report = detail::header("check", rc);
    const AssumptionReport rep = check_assumptions(rc.model, rc.errors, rc.check.opt);
    res.report["assumptions"] = to_json(rep);
    res.exit_code = rep.all_pass() ? kDefinitive : kNegative;
    return res;
}

inline CommandResult cmd_lyapunov(const RunConfig& rc, const RunOptions& opt) {
    CommandResult res;
    res.report = detail::header("lyapunov", rc);
    if (!detail::assumptions_gate(rc, opt, res)) return res;
    const auto& p = rc.lyapunov;
    LyapOptions lo;
    lo.n_steps = p.n_steps;
    lo.burn_in = p.burn_in;
    lo.batches = p.batches;
    lo.replicates = p.replicates;
    lo.threads = opt.threads;
    std::vector<TraceRow> trace;
    const RandomStream root(rc.seed);
    const LyapPair pr = estimate_lyapunov_pair(rc.model, rc.errors, lo, root.split("model-sim"), &trace, p.trace_every);
    const StabilityVerdict v = lyapunov_verdict(pr.main);
    res.report["log_rho"] = num(pr.main.mean_logw);
    res.report["stderr"] = num(pr.main.se);
    res.report["verdict"] = detail::stability_name(v);
    if (pr.main.unreliable()) res.report["reason"] = "underflow fraction above 1e-2: estimate unreliable";
    res.report["estimate"] = to_json(pr.main);
    res.report["estimate_alt"] = to_json(pr.alt);
    std::ostringstream csv;
    csv.precision(17);
    csv << "t,log_w";
    for (std::size_t i = 0; i < rc.model.p(); ++i) csv << ",theta" << i + 1;
    csv << '\n';
    for (const auto& row : trace) {
        csv << row.t << ',' << row.log_w;
        for (double x : row.theta) csv << ',' << x;
        csv << '\n';
    }
    res.files.emplace_back("lyapunov_trace.csv", csv.str());
    res.exit_code = v == StabilityVerdict::geometrically_ergodic ? kDefinitive
                    : v == StabilityVerdict::transient          ? kNegative
                                                                : kInconclusive;
    return res;
}

inline CommandResult cmd_moments(const RunConfig& rc, const RunOptions& opt) {
    CommandResult res;
    res.report = detail::header("moments", rc);
    if (!detail::assumptions_gate(rc, opt, res)) return res;
    const auto& mp = rc.moments;
    const double r = mp.r;
    GrowthOptions go = mp.growth;
    go.threads = opt.threads;
    const RandomStream ms = RandomStream(rc.seed).split("moments");
    const MomentGrowth mg = growth_rate(rc.model, rc.errors, r, go, ms);
    res.report["r"] = r;
    res.report["growth"] = to_json(mg);
    res.report["verdict"] = moment_verdict_name(mg.verdict);

    ojson closed = ojson::object();
    {
        const auto [a, b] = detail::coefficient_bounds(rc.model);
        try {
            closed["corollary22"] = to_json(corollary22_check(a, b, rc.errors, r));
        } catch (const NotApplicableError& e) {
            closed["corollary22"] = {{"applicable", false}, {"reason", e.what()}};
        }
    }
    std::optional<Delay1Result> d1;
    if (const auto co = detail::delay1_coefficients(rc.model)) {
        try {
            d1 = tarch_delay1_condition(co->first, co->second, rc.errors, r);
            closed["tarch_delay1"] = to_json(*d1);
        } catch (const NotApplicableError& e) {
            closed["tarch_delay1"] = {{"applicable", false}, {"reason", e.what()}};
        }
    }
    if (const auto o1 = detail::order1_coefficients(rc.model)) {
        const Order1Analysis oa = order1_analysis(o1->a1, o1->a2, o1->b1, o1->b2, rc.errors, r);
        closed["order1"] = to_json(oa);
    }
    res.report["closed_form"] = closed;

    if (mp.lambda) {
        const SpherePoints grid = growth_start_set(rc.model, rc.errors, mp.lambda_grid, 0, ms);
        const SpherePoints probes = growth_start_set(rc.model, rc.errors, mp.probes, 0, ms.split("probes"));
        const LambdaChoice ch =
            choose_lambda_parameters(rc.model, rc.errors, mg, grid, mp.lambda_particles, ms.split("lambda"), opt.threads);
        ojson lj;
        lj["choice"] = to_json(ch);
        if (ch.found) {
            const LambdaTable lt = build_lambda(rc.model, rc.errors, r, ch.n, ch.delta, grid, mp.lambda_particles,
                                                ms.split("lambda"), opt.threads);
            lj["table"] = to_json(lt);
            const SphereFunction f = [&lt](std::span<const double> th) { return lt(th); };
            lj["drift_3_6"] = to_json(
                check_drift_3_6(rc.model, rc.errors, r, f, probes, mp.inner_samples, ms.split("drift36"), opt.threads));
        }
        if (d1 && d1->holds)
            lj["drift_3_6_delay1"] = to_json(check_drift_3_6(rc.model, rc.errors, r, delay1_lambda(*d1), probes,
                                                             mp.inner_samples, ms.split("drift36"), opt.threads));
        res.report["lambda"] = lj;
    }
    std::ostringstream csv;
    csv.precision(17);
    csv << "n,log_moment,g_n\n";
    for (std::size_t t = 0; t < mg.g_n.size(); ++t) csv << t + 1 << ',' << mg.log_moment[t] << ',' << mg.g_n[t] << '\n';
    res.files.emplace_back("moments_growth.csv", csv.str());
    res.exit_code = mg.verdict == MomentVerdict::finite     ? kDefinitive
                    : mg.verdict == MomentVerdict::infinite ? kNegative
                                                            : kInconclusive;
    return res;
}

inline CommandResult cmd_kappa(const RunConfig& rc, const RunOptions& opt) {
    CommandResult res;
    res.report = detail::header("kappa", rc);
    if (!detail::assumptions_gate(rc, opt, res)) return res;
    const auto& kp = rc.kappa;
    GrowthOptions go = kp.growth;
    go.threads = opt.threads;
    try {
        const KappaSolution s =
            solve_kappa(rc.model, rc.errors, kp.lo, kp.hi, kp.tol, go, RandomStream(rc.seed).split("moments"), kp.lyap_steps);
        res.report["solution"] = to_json(s);
        std::ostringstream csv;
        csv.precision(17);
        csv << "r,g_hat,stderr\n";
        auto its = s.iterations;
        std::sort(its.begin(), its.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
        for (const auto& i : its) csv << i.r << ',' << i.g_hat << ',' << i.se << '\n';
        res.files.emplace_back("kappa.csv", csv.str());
        res.exit_code = s.converged ? kDefinitive : kInconclusive;
    } catch (const BracketError& e) {
        res.report["error"] = {{"type", "bracket"}, {"message", e.what()}};
        res.exit_code = kUsage;
    } catch (const PreconditionError& e) {
        res.report["error"] = {{"type", "precondition"}, {"message", e.what()}};
        res.exit_code = kNegative;
    }
    return res;
}

inline CommandResult cmd_order1(const RunConfig& rc, const RunOptions&) {
    CommandResult res;
    res.report = detail::header("order1", rc);
    const auto co = detail::order1_coefficients(rc.model);
    if (!co) throw ConfigError("order1: needs a p = 1 model with at most one threshold");
    const Order1Analysis oa = order1_analysis(co->a1, co->a2, co->b1, co->b2, rc.errors, rc.order1.r);
    res.report["analysis"] = to_json(oa);
    res.report["verdict"] = oa.log_rho < 0.0 ? "geometrically-ergodic" : "transient";
    res.exit_code = oa.log_rho < 0.0 ? kDefinitive : kNegative;
    return res;
}

inline CommandResult cmd_crosscheck(const RunConfig& rc, const RunOptions& opt) {
    CommandResult res;
    res.report = detail::header("crosscheck", rc);
    if (!detail::assumptions_gate(rc, opt, res)) return res;
    const auto& cp = rc.crosscheck;
    const RandomStream root(rc.seed);
    LyapOptions lo;
    lo.n_steps = cp.n_steps;
    lo.burn_in = cp.burn_in;
    lo.threads = opt.threads;
    const LyapPair pr = estimate_lyapunov_pair(rc.model, rc.errors, lo, root.split("model-sim"));
    res.report["log_rho"] = to_json(pr.main);
    res.report["log_rho_alt"] = to_json(pr.alt);

    struct Est {
        std::string name;
        double v, se;
    };
    std::vector<Est> ests = {{"log_rho", pr.main.mean_logw, pr.main.se},
                             {"log_rho_alt", pr.alt.mean_logw, pr.alt.se}};
    ojson flags = ojson::array();
    if (rc.model.is_pure_arch()) {
        const auto b = rc.model.arch_coefficients();
        const RandomStream mx = root.split("matrix");
        const GammaEstimate g = estimate_gamma(b, rc.errors, cp.gamma_steps, cp.gamma_replicates, mx,
                                               MatrixNorm::frobenius, opt.threads);
        const GammaEstimate g2 = estimate_gamma(b, rc.errors, cp.gamma_steps, cp.gamma_replicates, mx,
                                                MatrixNorm::max_row_sum, opt.threads);
        res.report["gamma"] = to_json(g);
        res.report["gamma_max_row_sum"] = to_json(g2);
        res.report["half_gamma"] = num(0.5 * g.gamma);
        ests.push_back({"half_gamma", 0.5 * g.gamma, 0.5 * g.se});
        const auto ni = detail::agreement("gamma_frobenius", g.gamma, g.se, "gamma_max_row_sum", g2.gamma, g2.se, 1.0);
        flags.push_back({{"check", "norm_independence"}, {"diff", num(ni.diff)}, {"combined_stderr", num(ni.combined_se)},
                         {"agree", ni.agree}});
    } else {
        res.report["gamma"] = {{"skipped", true}, {"note", "matrix branch needs a pure ARCH(p) model"}};
    }
    const auto rows = empirical_drift(rc.model, rc.errors, cp.radii, cp.drift_n, cp.drift_replicates, root.split("drift"),
                                      opt.threads);
    res.report["drift_table"] = to_json(rows);
    const double r_max = *std::max_element(cp.radii.begin(), cp.radii.end());
    const std::uint64_t n_max = *std::max_element(cp.drift_n.begin(), cp.drift_n.end());
    for (const auto& row : rows)
        if (row.radius == r_max && row.n == n_max) ests.push_back({"drift", row.tail_mean, row.tail_se});
    for (std::size_t i = 0; i < ests.size(); ++i)
        for (std::size_t k = i + 1; k < ests.size(); ++k) {
            const auto g = detail::agreement(ests[i].name, ests[i].v, ests[i].se, ests[k].name, ests[k].v, ests[k].se);
            flags.push_back({{"check", g.a + " vs " + g.b},
                             {"diff", num(g.diff)},
                             {"combined_stderr", num(g.combined_se)},
                             {"agree", g.agree}});
        }
    bool all = true;
    for (const auto& f : flags) all = all && f["agree"].get<bool>();
    res.report["agreement"] = flags;
    res.report["all_agree"] = all;
    res.exit_code = all ? kDefinitive : kNegative;
    return res;
}

inline CommandResult cmd_simulate(const RunConfig& rc, const RunOptions&) {
    CommandResult res;
    res.report = detail::header("simulate", rc);
    const PathRecord rec = simulate(rc.model, rc.errors, rc.simulate.x0, rc.simulate.n,
                                    RandomStream(rc.seed).split("model-sim").split("simulate"));
    std::ostringstream csv;
    write_path_csv(csv, rec);
    res.report["n"] = rc.simulate.n;
    res.report["steps_completed"] = rec.xi.size();
    res.report["exploded"] = rec.exploded;
    if (rec.exploded) res.report["explode_t"] = rec.explode_t;
    res.report["final_norm"] = rec.norms.empty() ? num(0.0) : num(rec.norms.back());
    res.files.emplace_back("simulate.csv", csv.str());
    res.primary_text = csv.str();
    return res;
}

inline CommandResult run_command(const std::string& name, const RunConfig& rc, const RunOptions& opt) {
    if (name == "check") return cmd_check(rc, opt);
    if (name == "lyapunov") return cmd_lyapunov(rc, opt);
    if (name == "moments") return cmd_moments(rc, opt);
    if (name == "kappa") return cmd_kappa(rc, opt);
    if (name == "order1") return cmd_order1(rc, opt);
    if (name == "crosscheck") return cmd_crosscheck(rc, opt);
    if (name == "simulate") return cmd_simulate(rc, opt);
    throw ConfigError("unknown command " + name);
}

}  // namespace tarch::cli
