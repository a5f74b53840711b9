// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "tarch/tarch.hpp"

using namespace tarch;
namespace fs = std::filesystem;

namespace {

const unsigned kThreads = std::max(1u, std::thread::hardware_concurrency());

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

// E log|e| for the standard normal: 2 int_0^inf log(u) phi(u) du with u = exp(s), by Gauss-Kronrod.
double oracle_elog_gauss() {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto f = [](double s) {
        const double u = std::exp(s);
        return 2.0 * s * u * std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
    };
    return GK::integrate(f, -60.0, 0.0, 15, 1e-14) + GK::integrate(f, 0.0, 4.0, 15, 1e-14);
}

// E|e|^k for the standard normal by Gauss-Kronrod.
double oracle_abs_moment_gauss(double k) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto f = [k](double u) { return 2.0 * std::pow(u, k) * std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi); };
    return GK::integrate(f, 0.0, 5.0, 25, 1e-14) + GK::integrate(f, 5.0, 60.0, 25, 1e-14);
}

double combined(double a, double b) { return std::hypot(a, b); }

LyapOptions lyap(std::uint64_t n, unsigned threads = 1, std::size_t reps = 1) {
    LyapOptions o;
    o.n_steps = n;
    o.burn_in = 10000;
    o.replicates = reps;
    o.threads = threads;
    return o;
}

// --- criteria ---------------------------------------------------------------

Outcome c1_arch1_boundary() {
    Outcome o;
    const double oracle = oracle_elog_gauss();
    const auto g = ErrorDist::gaussian();
    const auto t0 = std::chrono::steady_clock::now();
    const auto est = estimate_lyapunov(models::arch({1.0}), g, lyap(1'000'000), RandomStream(101));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail << "log rho(b=1) = " << est.mean_logw << " +- " << est.se << " vs " << oracle << ", " << secs << " s;";
    o.require(std::abs(est.mean_logw - oracle) < 4.0 * est.se, "log rho within 4 stderr");
    o.require(secs < 30.0, "runtime < 30 s single-threaded");

    // Grid over [1.85, 1.93], same seed at every b.
    std::vector<double> bs, vals, ses;
    for (int k = 0; k <= 8; ++k) {
        const double b = 1.85 + 0.01 * k;
        const auto e = estimate_lyapunov(models::arch({b}), g, lyap(1'000'000), RandomStream(202));
        bs.push_back(b);
        vals.push_back(e.mean_logw);
        ses.push_back(e.se);
    }
    o.require(vals.front() + 3.0 * ses.front() < 0.0, "log rho(1.85) < 0");
    o.require(vals.back() - 3.0 * ses.back() > 0.0, "log rho(1.93) > 0");
    double crossing = NAN, cross_se = NAN;
    for (std::size_t k = 0; k + 1 < bs.size(); ++k)
        if (vals[k] < 0.0 && vals[k + 1] >= 0.0) {
            const double slope = (vals[k + 1] - vals[k]) / (bs[k + 1] - bs[k]);
            crossing = bs[k] - vals[k] / slope;
            cross_se = ses[k] / slope;
        }
    const double bstar = std::exp(-oracle);
    o.detail << " crossing " << crossing << " +- " << cross_se << " vs b* = " << bstar;
    o.require(std::isfinite(crossing) && crossing > 1.85 && crossing < 1.93, "crossing inside [1.85, 1.93]");
    o.require(std::abs(crossing - bstar) < 4.0 * cross_se, "crossing within 4 stderr of b*");
    return o;
}

Outcome c2_triangle() {
    Outcome o;
    const std::vector<double> b{0.5, 0.5};
    const auto spec = models::arch(b);
    const auto g = ErrorDist::gaussian();
    const auto pair = estimate_lyapunov_pair(spec, g, lyap(1'000'000), RandomStream(303));
    const auto gam = estimate_gamma(b, g, 1'000'000, 1, RandomStream(304));
    const auto drift = empirical_drift(spec, g, {1e8}, {20}, 100000, RandomStream(305), kThreads);
    struct Est {
        const char* name;
        double v, se;
    };
    const Est e[] = {{"log_rho", pair.main.mean_logw, pair.main.se},
                     {"log_rho_alt", pair.alt.mean_logw, pair.alt.se},
                     {"gamma/2", gam.gamma / 2.0, gam.se / 2.0},
                     {"drift@1e8", drift[0].tail_mean, drift[0].tail_se}};
    for (const auto& x : e) o.detail << x.name << " = " << x.v << " +- " << x.se << "; ";
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
            o.require(std::abs(e[i].v - e[j].v) < 4.0 * combined(e[i].se, e[j].se),
                      std::string(e[i].name) + " vs " + e[j].name);
    return o;
}

Outcome c3_order1() {
    Outcome o;
    const auto g = ErrorDist::gaussian();
    RandomStream draw(404);
    int fails_p = 0, fails_rho = 0, fails_nu = 0;
    double worst_z = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double a1 = -1.0 + 2.0 * draw.uniform(), a2 = -1.0 + 2.0 * draw.uniform();
        const double b1 = 0.2 + 1.3 * draw.uniform(), b2 = 0.2 + 1.3 * draw.uniform();
        const auto spec = models::tar_arch1(a1, a2, b1, b2);
        const auto oa = order1_analysis(a1, a2, b1, b2, g, 2.0);
        const RandomStream rs(1000 + static_cast<std::uint64_t>(k));

        const auto st = stationarity_diagnostic(spec, g, 4000, 1000, rs.split("transitions"));
        const double f1 = static_cast<double>(st.minus_to_plus) / static_cast<double>(st.from_minus);
        const double f2 = static_cast<double>(st.plus_to_minus) / static_cast<double>(st.from_plus);
        const double s1 = std::sqrt(oa.p1 * (1.0 - oa.p1) / static_cast<double>(st.from_minus));
        const double s2 = std::sqrt(oa.p2 * (1.0 - oa.p2) / static_cast<double>(st.from_plus));
        worst_z = std::max({worst_z, std::abs(f1 - oa.p1) / s1, std::abs(f2 - oa.p2) / s2});
        if (std::abs(f1 - oa.p1) > 3.0 * s1 || std::abs(f2 - oa.p2) > 3.0 * s2) ++fails_p;

        const auto est = estimate_lyapunov(spec, g, lyap(200000), rs.split("lyapunov"));
        if (std::abs(est.mean_logw - oa.log_rho) > 4.0 * est.se) ++fails_rho;

        NuFunction nu;
        nu.grid = {{-1.0}, {1.0}};
        nu.values = {oa.nu_minus, oa.nu_plus};
        nu.se = {0.0, 0.0};
        const auto eq = check_near_equilibrium(spec, g, nu, nu.grid, 100000, oa.log_rho, rs.split("equilibrium"));
        for (const auto& row : eq.rows)
            if (std::abs(row.deviation) > 4.0 * row.se) ++fails_nu;
    }
    o.detail << "20 draws: transition misses " << fails_p << " (max |z| " << worst_z << "), log rho misses "
             << fails_rho << ", nu deviation misses " << fails_nu;
    o.require(fails_p == 0, "transition frequencies within 3 binomial stderr");
    o.require(fails_rho == 0, "log rho within 4 stderr");
    o.require(fails_nu == 0, "near-equilibrium deviation zero within 4 stderr");
    return o;
}

Outcome c4_mixture() {
    Outcome o;
    const auto g = ErrorDist::gaussian();
    std::uint64_t seed = 500;
    for (auto [b1, b2] : {std::pair{0.5, 0.9}, {0.3, 1.2}}) {
        const auto tarch = models::tarch_delay1({b1, b1}, {b2, b2});
        const auto mix = ErrorDist::mixture(g, {{0.5, b1}, {0.5, b2}});
        const auto a = estimate_lyapunov(tarch, g, lyap(1'000'000), RandomStream(++seed));
        const auto m = estimate_lyapunov(models::arch({1.0, 1.0}), mix, lyap(1'000'000), RandomStream(++seed));
        o.detail << "(" << b1 << "," << b2 << "): " << a.mean_logw << " +- " << a.se << " vs " << m.mean_logw << " +- "
                 << m.se << "; ";
        o.require(std::abs(a.mean_logw - m.mean_logw) < 4.0 * combined(a.se, m.se), "equivalence");
    }
    return o;
}

Outcome c5_moment_boundary() {
    Outcome o;
    const auto g = ErrorDist::gaussian();
    GrowthOptions go;
    go.threads = kThreads;
    for (double b : {0.6, 0.8}) {
        const auto res = tarch_delay1_condition({b, b}, {b, b}, g, 2.0);
        const auto m = growth_rate(models::tarch_delay1({b, b}, {b, b}), g, 2.0, go, RandomStream(600));
        o.detail << "b=" << b << ": g_hat " << m.g_hat << " +- " << m.se << " " << moment_verdict_name(m.verdict)
                 << ", closed form lhs " << res.lhs << "; ";
        const MomentVerdict want = b == 0.6 ? MomentVerdict::finite : MomentVerdict::infinite;
        o.require(m.verdict == want, "verdict at b=" + std::to_string(b));
        o.require(res.holds == (b == 0.6), "closed form at b=" + std::to_string(b));
    }
    const auto res = tarch_delay1_condition({0.6, 0.6}, {0.6, 0.6}, g, 2.0);
    const auto probes = sphere_grid(2, 24);
    const auto rep = check_drift_3_6(models::tarch_delay1({0.6, 0.6}, {0.6, 0.6}), g, 2.0, delay1_lambda(res), probes,
                                     100000, RandomStream(601), kThreads);
    double max_z = 0.0, max_se = 0.0;
    for (const auto& r : rep.rows) {
        max_z = std::max(max_z, std::abs(r.mean - res.beta) / r.se);
        max_se = std::max(max_se, r.se);
    }
    o.detail << "drift under d table: [" << rep.min_mean << ", " << rep.max_mean << "] vs beta " << res.beta
             << ", max |z| " << max_z;
    o.require(max_z < 4.0, "each probe equals beta within 4 stderr");
    o.require(rep.max_mean - rep.min_mean < 4.0 * std::sqrt(2.0) * max_se, "constant over probes");
    return o;
}

Outcome c6_kappa() {
    Outcome o;
    const auto g = ErrorDist::gaussian();
    for (auto [b, lo, hi] : {std::tuple{1.0, 1.0, 3.0}, {0.5, 6.0, 14.0}}) {
        auto f = [b](double k) { return k * std::log(b) + std::log(oracle_abs_moment_gauss(k)); };
        std::uintmax_t it = 100;
        const auto root = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(40), it);
        const double oracle = 0.5 * (root.first + root.second);
        GrowthOptions go;
        go.particles = 12500;
        go.threads = kThreads;
        const auto sol = solve_kappa(models::arch({b}), g, lo, hi, 0.05, go, RandomStream(700));
        o.detail << "b=" << b << ": kappa " << sol.kappa << " vs " << oracle << "; ";
        o.require(sol.converged && std::abs(sol.kappa - oracle) <= 0.05, "kappa within 0.05 at b=" + std::to_string(b));
        if (b == 1.0) o.require(std::abs(oracle - 2.0) < 1e-9, "oracle kappa = 2 at b = 1");
    }
    return o;
}

Outcome c7_identities() {
    Outcome o;
    RandomStream rs(800);
    double worst21 = 0.0;
    for (int k = 0; k < 100; ++k) {
        const std::size_t p = 1 + rs.next_u64() % 8;
        std::vector<double> c(p);
        double s = 0.0;
        for (auto& v : c) s += (v = rs.uniform());
        const double target = 0.01 + 0.98 * rs.uniform();
        for (auto& v : c) v *= target / s;
        const auto t = theorem21_test_function(c);
        worst21 = std::max(worst21, std::abs(t.d[0] - 1.0));
        for (std::size_t i = 0; i < p; ++i)
            worst21 = std::max(worst21, std::abs(t.beta * t.d[i] - c[i] - (i + 1 < p ? t.d[i + 1] : 0.0)));
    }
    double worst44 = 0.0;
    int held = 0;
    const ErrorDist dists[] = {ErrorDist::gaussian(), ErrorDist::laplace(), ErrorDist::student_t(5.0)};
    for (int k = 0; k < 100; ++k) {
        const std::size_t p = 1 + rs.next_u64() % 5;
        std::vector<double> b1(p), b2(p);
        for (std::size_t i = 0; i < p; ++i) {
            b1[i] = 0.05 + 0.45 * rs.uniform();
            b2[i] = 0.05 + 0.45 * rs.uniform();
        }
        const auto res = tarch_delay1_condition(b1, b2, dists[k % 3], 0.5 + 1.5 * rs.uniform());
        if (!res.holds) continue;
        ++held;
        worst44 = std::max({worst44, std::abs(res.resid_sum), res.resid_last, res.resid_recursion});
    }
    const auto tr = verify_T_recursion({1.0, 1.0}, ErrorDist::gaussian(), 1000, RandomStream(801));
    const auto tr3 = verify_T_recursion({0.6, 0.3, 0.5}, ErrorDist::gaussian(), 1000, RandomStream(802));
    const double worst_t = std::max({tr.max_T_deviation, tr.max_w2_deviation, tr3.max_T_deviation, tr3.max_w2_deviation});
    o.detail << "test-function max resid " << worst21 << "; delay-1 max resid " << worst44 << " over " << held
             << " cases; T-recursion max dev " << worst_t;
    o.require(worst21 <= 1e-12, "test-function identities to 1e-12");
    o.require(held >= 50 && worst44 <= 1e-10, "delay-1 identities to 1e-10");
    o.require(worst_t <= 1e-8, "T recursion to 1e-8");
    return o;
}

Outcome c8_small_r() {
    Outcome o;
    const auto g = ErrorDist::gaussian();
    const double r = 1e-3;
    const std::pair<const char*, ModelSpec> suite[] = {
        {"arch2_half", models::arch({0.5, 0.5})},
        {"tarch2_delay1_b06", models::tarch_delay1({0.6, 0.6}, {0.6, 0.6})},
        {"tar_arch1_example", models::tar_arch1(0.5, -0.3, 0.8, 1.1)},
    };
    GrowthOptions go;
    go.threads = kThreads;
    std::uint64_t seed = 900;
    for (const auto& [name, spec] : suite) {
        const auto m = growth_rate(spec, g, r, go, RandomStream(++seed));
        const auto ly = estimate_lyapunov(spec, g, lyap(1'000'000), RandomStream(++seed));
        const double x = (m.g_hat - 1.0) / r, xs = m.se / r;
        const double tol = 0.05 * std::abs(ly.mean_logw) + 4.0 * combined(xs, ly.se);
        o.detail << name << ": " << x << " +- " << xs << " vs " << ly.mean_logw << "; ";
        o.require(std::abs(x - ly.mean_logw) <= tol, name);
    }
    return o;
}

struct CliRun {
    int code = -1;
    std::string out;
};

CliRun run_cli(const std::string& args) {
    const std::string cmd = std::string(TARCH_CLI_PATH) + " " + args + " 2>/dev/null";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome c9_determinism() {
    Outcome o;
    const std::pair<const char*, const char*> runs[] = {
        {"check", "arch2_half.json"},      {"lyapunov", "arch2_half.json"},     {"moments", "tarch2_delay1_b06.json"},
        {"kappa", "arch1_b1.json"},        {"order1", "tar_arch1_example.json"}, {"crosscheck", "arch2_half.json"},
        {"simulate", "tar_arch1_example.json"},
    };
    const fs::path root = fs::temp_directory_path() / "tarch_acceptance";
    int identical = 0;
    for (const auto& [cmd, conf] : runs) {
        std::vector<std::string> outs;
        std::vector<fs::path> dirs;
        for (int k = 0; k < 2; ++k) {
            const fs::path d = root / (std::string(cmd) + "_" + std::to_string(k));
            fs::remove_all(d);
            const auto r = run_cli(std::string(cmd) + " --config " + TARCH_CONFIG_DIR + "/" + conf + " --out " + d.string());
            outs.push_back(r.out + "\nexit=" + std::to_string(r.code));
            dirs.push_back(d);
        }
        bool same = outs[0] == outs[1] && !outs[0].empty();
        std::size_t files = 0;
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            ++files;
            const fs::path other = dirs[1] / entry.path().filename();
            same = same && fs::exists(other) && slurp(entry.path()) == slurp(other);
        }
        same = same && files > 0;
        identical += same ? 1 : 0;
        o.require(same, std::string(cmd) + " reproduces");
    }
    fs::remove_all(root);
    o.detail << identical << "/7 commands byte-identical across reruns";
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"#1 ARCH(1) boundary", c1_arch1_boundary}, {"#2 estimator triangle", c2_triangle},
        {"#3 order-1 closed form", c3_order1},       {"#4 mixture equivalence", c4_mixture},
        {"#5 moment boundary", c5_moment_boundary}, {"#6 kappa solver", c6_kappa},
        {"#7 algebraic identities", c7_identities},  {"#8 small-r link", c8_small_r},
        {"#9 determinism", c9_determinism},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << " (" << secs << " s)" << std::endl;
        failed += o.pass ? 0 : 1;
    }
    std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
