#pragma once

// JSON and CSV rendering of analysis results. Key order is fixed so reports are byte-stable.

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tarch/tarch.hpp"

namespace tarch::cli {

using ojson = nlohmann::ordered_json;

inline ojson num(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

inline ojson vec(const std::vector<double>& v) {
    ojson a = ojson::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

inline ojson to_json(const ModelSpec& spec) {
    ojson j;
    j["p"] = spec.p();
    ojson planes = ojson::array();
    for (const auto& h : spec.hyperplanes()) planes.push_back(vec(h));
    j["hyperplanes"] = planes;
    ojson regs = ojson::object();
    for (const auto& [pat, rc] : spec.regimes()) {
        ojson r;
        r["a0"] = rc.a0;
        r["avec"] = vec(rc.avec);
        r["b0"] = rc.b0;
        r["bvec"] = vec(rc.bvec);
        regs[spec.pattern_string(pat)] = r;
    }
    j["regimes"] = regs;
    ojson att = ojson::array();
    for (Pattern p : spec.attainable_patterns()) att.push_back(spec.pattern_string(p));
    j["attainable_patterns"] = att;
    return j;
}

inline ojson to_json(const AssumptionReport& rep) {
    ojson a = ojson::array();
    for (const auto& e : rep.entries) {
        ojson j;
        j["id"] = e.id;
        j["status"] = status_name(e.status);
        j["numerical_evidence"] = e.numerical_evidence;
        j["evidence"] = e.evidence;
        j["warnings"] = e.warnings;
        a.push_back(j);
    }
    ojson j;
    j["all_pass"] = rep.all_pass();
    j["entries"] = a;
    return j;
}

inline ojson to_json(const LyapEstimate& e) {
    ojson j;
    j["estimator"] = e.estimator;
    j["log_rho"] = num(e.mean_logw);
    j["stderr"] = num(e.se);
    j["n_steps"] = e.n_steps;
    j["burn_in"] = e.burn_in;
    j["replicates"] = e.replicates;
    j["underflow_count"] = e.underflow_count;
    j["underflow_fraction"] = num(e.underflow_fraction());
    j["degenerate_count"] = e.degenerate_count;
    j["restart_count"] = e.restart_count;
    return j;
}

inline ojson to_json(const MomentGrowth& m) {
    ojson j;
    j["r"] = m.r;
    j["delta"] = m.delta;
    j["g_hat"] = num(m.g_hat);
    j["stderr"] = num(m.se);
    j["log_g_hat"] = num(m.log_g_hat);
    j["log_g_stderr"] = num(m.log_g_se);
    j["verdict"] = moment_verdict_name(m.verdict);
    j["overflow"] = m.overflow;
    j["sup_note"] = "max over a finite start set: a lower bound on the sup over the sphere";
    j["n_starts"] = m.n_starts;
    j["groups"] = m.groups;
    j["particles_per_group"] = m.particles;
    ojson rows = ojson::array();
    for (std::size_t t = 0; t < m.g_n.size(); ++t) {
        ojson r;
        r["n"] = t + 1;
        r["log_moment"] = num(m.log_moment[t]);
        r["g_n"] = num(m.g_n[t]);
        rows.push_back(r);
    }
    j["table"] = rows;
    return j;
}

inline ojson to_json(const LambdaChoice& c) {
    ojson j;
    j["found"] = c.found;
    j["n"] = c.n;
    j["delta"] = num(c.delta);
    j["inflated_rate"] = num(c.inflated_rate);
    j["halvings"] = c.halvings;
    if (!c.reason.empty()) j["reason"] = c.reason;
    return j;
}

inline ojson to_json(const LambdaTable& t) {
    ojson j;
    j["r"] = t.r;
    j["n"] = t.n;
    j["delta"] = t.delta;
    j["grid_points"] = t.grid.size();
    j["k6"] = num(t.k6);
    j["lower_bound"] = num(t.lower_bound);
    j["upper_bound"] = num(t.upper_bound);
    j["bound_violations"] = t.bound_violations;
    if (!t.values.empty()) {
        j["min"] = num(*std::min_element(t.values.begin(), t.values.end()));
        j["max"] = num(*std::max_element(t.values.begin(), t.values.end()));
    }
    return j;
}

inline ojson to_json(const DriftReport& d) {
    ojson j;
    j["verdict"] = drift_verdict_name(d.verdict);
    j["max_mean"] = num(d.max_mean);
    j["min_mean"] = num(d.min_mean);
    j["max_upper_3se"] = num(d.max_upper);
    ojson rows = ojson::array();
    for (const auto& r : d.rows) {
        ojson x;
        x["theta"] = vec(r.theta);
        x["mean"] = num(r.mean);
        x["stderr"] = num(r.se);
        rows.push_back(x);
    }
    j["probes"] = rows;
    return j;
}

inline ojson to_json(const KappaSolution& s) {
    ojson j;
    j["kappa"] = num(s.kappa);
    j["converged"] = s.converged;
    j["g_at_kappa"] = num(s.g_at_kappa);
    j["bracket"] = {s.bracket_lo, s.bracket_hi};
    j["tol"] = s.tol;
    j["log_rho"] = num(s.log_rho);
    j["log_rho_stderr"] = num(s.log_rho_se);
    ojson it = ojson::array();
    for (const auto& i : s.iterations) {
        ojson x;
        x["r"] = i.r;
        x["g_hat"] = num(i.g_hat);
        x["stderr"] = num(i.se);
        it.push_back(x);
    }
    j["iterations"] = it;
    j["monotonicity_flags"] = s.monotonicity_flags;
    return j;
}

inline ojson to_json(const Order1Analysis& o) {
    ojson j;
    j["r"] = o.r;
    j["p1"] = num(o.p1);
    j["p2"] = num(o.p2);
    j["pi_minus"] = num(o.pi_minus);
    j["pi_plus"] = num(o.pi_plus);
    j["L1"] = num(o.L1);
    j["L2"] = num(o.L2);
    j["log_rho"] = num(o.log_rho);
    j["nu_plus"] = num(o.nu_plus);
    j["nu_minus"] = num(o.nu_minus);
    j["E"] = {{"E11", num(o.E11)}, {"E12", num(o.E12)}, {"E21", num(o.E21)}, {"E22", num(o.E22)}};
    j["cond_4_1"] = {o.cond_4_1_max, o.cond_4_1_product};
    j["cond_4_1_holds"] = o.cond_4_1();
    j["stationary_moment"] = num(o.stationary_moment);
    j["cond_stationary_w_r"] = o.cond_stationary_w_r;
    j["two_state_growth_rate"] = num(o.growth_rate);
    return j;
}

inline ojson to_json(const Corollary22Result& c) {
    ojson j;
    j["branch"] = c.branch;
    j["c"] = vec(c.c);
    j["sum"] = num(c.sum);
    j["holds"] = c.holds;
    return j;
}

inline ojson to_json(const Delay1Result& d) {
    ojson j;
    j["r"] = d.r;
    j["E1"] = num(d.E1);
    j["E2"] = num(d.E2);
    j["p1"] = num(d.p1);
    j["p2"] = num(d.p2);
    j["m"] = num(d.m);
    j["c"] = vec(d.c);
    j["lhs"] = num(d.lhs);
    j["holds"] = d.holds;
    if (d.holds) {
        j["beta"] = num(d.beta);
        j["d"] = {vec(d.d[0]), vec(d.d[1])};
        j["resid_sum"] = num(d.resid_sum);
        j["resid_last"] = num(d.resid_last);
        j["resid_recursion"] = num(d.resid_recursion);
        j["resid_recursion_m_scaled"] = num(d.resid_recursion_m);
    }
    return j;
}

inline ojson to_json(const GammaEstimate& g) {
    ojson j;
    j["gamma"] = num(g.gamma);
    j["stderr"] = num(g.se);
    j["n_steps"] = g.n_steps;
    j["replicates"] = g.replicates;
    j["norm"] = matrix_norm_name(g.norm);
    return j;
}

inline ojson to_json(const std::vector<DriftRow>& rows) {
    ojson a = ojson::array();
    for (const auto& r : rows) {
        ojson j;
        j["radius"] = r.radius;
        j["n"] = r.n;
        j["drift"] = num(r.mean);
        j["stderr"] = num(r.se);
        j["tail_drift"] = num(r.tail_mean);
        j["tail_stderr"] = num(r.tail_se);
        j["max_over_directions"] = num(r.max_over_directions);
        j["replicates"] = r.replicates;
        j["exploded"] = r.exploded;
        j["restarts"] = r.restarts;
        a.push_back(j);
    }
    return a;
}

inline void write_path_csv(std::ostream& os, const PathRecord& rec) {
    os.precision(17);
    os << "t,xi,norm\n";
    double n0 = 0.0;
    for (double v : rec.x0) n0 += v * v;
    os << 0 << ',' << rec.x0.front() << ',' << std::sqrt(n0) << '\n';
    for (std::size_t t = 0; t < rec.xi.size(); ++t) os << t + 1 << ',' << rec.xi[t] << ',' << rec.norms[t] << '\n';
    if (rec.exploded) os << "# numerically exploded at t=" << rec.explode_t << '\n';
}

}  // namespace tarch::cli
