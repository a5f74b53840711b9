#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "tarch/collapsed.hpp"
#include "tarch/moments.hpp"

using namespace tarch;
using Catch::Approx;

namespace {

constexpr double kElogGauss = -0.6351814227307392;

// E|e|^r for a standard normal.
double gauss_abs_moment(double r) {
    return std::pow(2.0, r / 2.0) * std::tgamma((r + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

GrowthOptions small_growth(std::size_t particles = 2000) {
    GrowthOptions o;
    o.n_max = 20;
    o.particles = particles;
    o.grid_points = 32;
    o.stationary_starts = 16;
    o.threads = 4;
    return o;
}

bool within(double x, double target, double se, double k = 4.0) { return std::abs(x - target) <= k * se; }

}  // namespace

TEST_CASE("ARCH(1) growth rate is b^r E|e|^r", "[moments]") {
    const auto g = ErrorDist::gaussian();
    const auto m09 = growth_rate(models::arch({0.9}), g, 2.0, small_growth(), RandomStream(1));
    CHECK(within(m09.g_hat, 0.81, m09.se));
    CHECK(m09.verdict == MomentVerdict::finite);
    CHECK(m09.n_starts == 2);
    const auto m1 = growth_rate(models::arch({1.0}), g, 2.0, small_growth(), RandomStream(2));
    CHECK(within(m1.g_hat, 1.0, m1.se));
    CHECK(m1.verdict == MomentVerdict::inconclusive);
    const auto m15 = growth_rate(models::arch({1.5}), g, 1.0, small_growth(), RandomStream(3));
    CHECK(within(m15.g_hat, 1.5 * gauss_abs_moment(1.0), m15.se));
    CHECK(m15.verdict == MomentVerdict::infinite);
    CHECK(m15.g_n.size() == 20);
}

TEST_CASE("growth rate errors", "[moments]") {
    CHECK_THROWS_AS(growth_rate(models::arch({0.5}), ErrorDist::student_t(3.0), 3.5, small_growth(), RandomStream(1)),
                    MomentError);
    auto o = small_growth();
    o.groups = 1;
    CHECK_THROWS_AS(growth_rate(models::arch({0.5}), ErrorDist::gaussian(), 2.0, o, RandomStream(1)), DomainError);
}

TEST_CASE("small r links to the exponent", "[moments]") {
    const auto g = ErrorDist::gaussian();
    const double r = 1e-3;
    const auto m = growth_rate(models::arch({0.7}), g, r, small_growth(), RandomStream(4));
    const double exact = (std::pow(0.7, r) * gauss_abs_moment(r) - 1.0) / r;
    CHECK(exact == Approx(std::log(0.7) + kElogGauss).epsilon(2e-3));
    CHECK(within((m.g_hat - 1.0) / r, exact, m.se / r));
}

TEST_CASE("delay-1 growth tracks the closed-form beta", "[moments]") {
    const auto g = ErrorDist::gaussian();
    for (double b : {0.6, 0.8}) {
        const auto spec = models::tarch_delay1({b, b}, {b, b});
        const auto res = tarch_delay1_condition({b, b}, {b, b}, g, 2.0);
        const auto m = growth_rate(spec, g, 2.0, small_growth(4000), RandomStream(5));
        // lhs = 2 b^2 with E e^2 = 1
        CHECK(res.lhs == Approx(2.0 * b * b).epsilon(1e-10));
        if (b == 0.6) {
            CHECK(res.holds);
            CHECK(m.verdict == MomentVerdict::finite);
            CHECK(within(m.g_hat, res.beta, m.se, 5.0));
        } else {
            CHECK_FALSE(res.holds);
            CHECK(m.verdict == MomentVerdict::infinite);
        }
    }
}

TEST_CASE("lambda with n = 1 is identically one", "[moments]") {
    const auto spec = models::arch({0.5, 0.5});
    const SpherePoints grid = sphere_grid(2, 16);
    const auto lt = build_lambda(spec, ErrorDist::gaussian(), 2.0, 1, 0.1, grid, 100, RandomStream(1));
    for (double v : lt.values) CHECK(v == 1.0);
    CHECK(lt.bound_violations == 0);
}

TEST_CASE("ARCH(1) drift with constant lambda", "[moments]") {
    const SphereFunction one = [](std::span<const double>) { return 1.0; };
    const auto rep = check_drift_3_6(models::arch({0.9}), ErrorDist::gaussian(), 2.0, one, {{-1.0}, {1.0}}, 200000,
                                     RandomStream(3));
    for (const auto& row : rep.rows) CHECK(within(row.mean, 0.81, row.se));
    CHECK(rep.verdict == DriftVerdict::holds);
}

TEST_CASE("asymmetric order-1 model needs a nonconstant lambda", "[moments]") {
    const auto g = ErrorDist::gaussian();
    const double a1 = -1.0, a2 = -0.3, b1 = 0.5, b2 = 0.5;
    const auto spec = models::tar_arch1(a1, a2, b1, b2);
    const auto o = order1_analysis(a1, a2, b1, b2, g, 2.0);
    REQUIRE(o.cond_4_1());
    REQUIRE(o.E11 + o.E12 > 1.1);
    const SpherePoints pm{{-1.0}, {1.0}};

    const SphereFunction one = [](std::span<const double>) { return 1.0; };
    const auto flat = check_drift_3_6(spec, g, 2.0, one, pm, 100000, RandomStream(7));
    CHECK(flat.verdict == DriftVerdict::fails);

    const auto growth = growth_rate(spec, g, 2.0, small_growth(), RandomStream(8));
    REQUIRE(growth.verdict == MomentVerdict::finite);
    const auto ch = choose_lambda_parameters(spec, g, growth, pm, 20000, RandomStream(9));
    REQUIRE(ch.found);
    const auto lt = build_lambda(spec, g, 2.0, ch.n, ch.delta, pm, 20000, RandomStream(10));
    const SphereFunction lam = [&lt](std::span<const double> th) { return lt(th); };
    const auto built = check_drift_3_6(spec, g, 2.0, lam, pm, 100000, RandomStream(7));
    CHECK(built.verdict == DriftVerdict::holds);
    // the ratio satisfies both inequalities preceding the closed-form condition
    const double gamma = lt.values[1] / lt.values[0];
    const auto [l1, l2] = order1_gamma_lhs(o, gamma);
    CHECK(l1 < 1.0);
    CHECK(l2 < 1.0);
    CHECK(lt.bound_violations == 0);
}

TEST_CASE("delay-1 drift is constant under the d table", "[moments]") {
    const auto g = ErrorDist::gaussian();
    const auto res = tarch_delay1_condition({0.6, 0.6}, {0.6, 0.6}, g, 2.0);
    REQUIRE(res.holds);
    const SpherePoints probes = sphere_grid(2, 12);
    const auto rep = check_drift_3_6(models::tarch_delay1({0.6, 0.6}, {0.6, 0.6}), g, 2.0, delay1_lambda(res), probes,
                                     50000, RandomStream(11));
    for (const auto& row : rep.rows) CHECK(within(row.mean, res.beta, row.se));
    CHECK(rep.verdict == DriftVerdict::holds);
}

TEST_CASE("test-function construction", "[moments]") {
    const auto t1 = theorem21_test_function({0.5});
    CHECK(t1.beta == Approx(0.5).epsilon(1e-14));
    CHECK(t1.d[0] == Approx(1.0).epsilon(1e-14));

    const auto t2 = theorem21_test_function({0.25, 0.25});
    const double beta = (0.25 + std::sqrt(1.0625)) / 2.0;
    CHECK(beta == Approx(0.640388).margin(1e-6));
    CHECK(t2.beta == Approx(beta).epsilon(1e-14));
    CHECK(t2.d[0] == Approx(1.0).epsilon(1e-13));
    CHECK(t2.d[1] == Approx(0.25 / beta).epsilon(1e-13));
    CHECK(t2.d[1] == Approx(0.390388).margin(1e-6));

    // leading zeros are allowed
    const auto tz = theorem21_test_function({0.0, 0.0, 0.3});
    CHECK(tz.beta == Approx(std::cbrt(0.3)).epsilon(1e-13));

    CHECK_THROWS_AS(theorem21_test_function({0.6, 0.5}), PreconditionError);
    CHECK_THROWS_AS(theorem21_test_function({0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(theorem21_test_function({}), DomainError);
}

TEST_CASE("test-function identities on random inputs", "[moments][property]") {
    RandomStream rs(21);
    for (int k = 0; k < 100; ++k) {
        const std::size_t p = 1 + rs.next_u64() % 6;
        std::vector<double> c(p);
        double s = 0.0;
        for (auto& v : c) s += (v = rs.uniform());
        const double target = 0.05 + 0.9 * rs.uniform();
        for (auto& v : c) v *= target / s;
        const auto t = theorem21_test_function(c);
        CHECK(t.beta > 0.0);
        CHECK(t.beta < 1.0);
        CHECK(std::abs(t.d[0] - 1.0) < 1e-12);
        for (std::size_t i = 0; i < p; ++i) {
            const double next = i + 1 < p ? t.d[i + 1] : 0.0;
            CHECK(std::abs(t.beta * t.d[i] - c[i] - next) < 1e-12);
        }
    }
}

TEST_CASE("coefficient-bound moment condition", "[moments]") {
    const auto g = ErrorDist::gaussian();
    const auto r1 = corollary22_check({0.3}, {0.5}, g, 1.0);
    CHECK(r1.branch == "i");
    CHECK(r1.sum == Approx(0.3 + 0.5 * std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-10));
    CHECK(r1.sum == Approx(0.699).margin(1e-3));
    CHECK(r1.holds);

    const auto r2 = corollary22_check({0.5, 0.3}, {0.4, 0.2}, g, 2.0);
    CHECK(r2.branch == "ii");
    CHECK(r2.sum == Approx(0.84).epsilon(1e-10));
    CHECK(r2.holds);

    const auto z = corollary22_check({0.0, 0.0}, {0.0, 0.0}, g, 1.5);
    CHECK(z.sum == 0.0);
    CHECK(z.holds);

    CHECK_THROWS_AS(corollary22_check({0.1}, {0.1}, g, 2.5), NotApplicableError);
    CHECK_THROWS_AS(corollary22_check({0.1}, {0.1}, ErrorDist::gaussian(1.0, 0.2), 1.5), NotApplicableError);
    CHECK_THROWS_AS(corollary22_check({0.1}, {0.1}, ErrorDist::gaussian(1.0, 0.2), 2.0), NotApplicableError);
    CHECK_NOTHROW(corollary22_check({0.1}, {0.1}, ErrorDist::gaussian(1.0, 0.2), 1.0));
}

TEST_CASE("delay-1 closed form", "[moments]") {
    const auto g = ErrorDist::gaussian();
    const auto r1 = tarch_delay1_condition({0.5, 0.5}, {0.5, 0.5}, g, 1.0);
    CHECK(r1.lhs == Approx(0.5 * std::sqrt(2.0 / std::numbers::pi) * 2.0).epsilon(1e-10));
    CHECK(r1.lhs == Approx(0.798).margin(1e-3));
    CHECK(r1.holds);

    // symmetric r = 2 boundary sits at b1^2 + b2^2 = 1
    const double edge = 1.0 / std::sqrt(2.0);
    CHECK(tarch_delay1_condition({edge * 0.999, edge * 0.999}, {edge * 0.999, edge * 0.999}, g, 2.0).holds);
    CHECK_FALSE(tarch_delay1_condition({edge * 1.001, edge * 1.001}, {edge * 1.001, edge * 1.001}, g, 2.0).holds);
    const auto r43 = tarch_delay1_condition({0.3, 0.3}, {0.9, 0.9}, g, 2.0);
    CHECK(r43.lhs == Approx(0.3 * 0.3 + 0.9 * 0.9).epsilon(1e-10));

    CHECK_THROWS_AS(tarch_delay1_condition({0.5}, {0.5}, g, 3.0), NotApplicableError);
    CHECK_THROWS_AS(tarch_delay1_condition({0.5}, {0.0}, g, 2.0), DomainError);
}

TEST_CASE("delay-1 identities hold to 1e-10", "[moments][property]") {
    RandomStream rs(33);
    const ErrorDist dists[] = {ErrorDist::gaussian(), ErrorDist::laplace(), ErrorDist::gaussian(1.0, 0.3)};
    int checked = 0;
    for (const auto& d : dists) {
        for (int k = 0; k < 30; ++k) {
            const std::size_t p = 1 + rs.next_u64() % 4;
            std::vector<double> b1(p), b2(p);
            for (std::size_t i = 0; i < p; ++i) {
                b1[i] = 0.05 + 0.5 * rs.uniform();
                b2[i] = 0.05 + 0.5 * rs.uniform();
            }
            const double r = 0.5 + 1.5 * rs.uniform();
            const auto res = tarch_delay1_condition(b1, b2, d, r);
            if (!res.holds) continue;
            ++checked;
            CHECK(std::abs(res.resid_sum) < 1e-10);
            CHECK(res.resid_last < 1e-10);
            CHECK(res.resid_recursion < 1e-10);
            CHECK(res.p1 + res.p2 == Approx(1.0).epsilon(1e-14));
        }
    }
    CHECK(checked > 30);
}

TEST_CASE("order-1 closed forms", "[moments]") {
    const auto g = ErrorDist::gaussian();
    SECTION("symmetric ARCH(1)") {
        const auto o = order1_analysis(0.0, 0.0, 2.0, 2.0, g, 2.0);
        CHECK(o.p1 == Approx(0.5));
        CHECK(o.p2 == Approx(0.5));
        CHECK(o.log_rho == Approx(std::log(2.0) + kElogGauss).margin(1e-10));
        CHECK(o.log_rho == Approx(0.057966).margin(1e-6));
        CHECK(o.nu_plus == Approx(0.0).margin(1e-12));
        CHECK(o.nu_minus == Approx(0.0).margin(1e-12));
    }
    SECTION("both moment checks agree on ARCH(1)") {
        for (double b = 0.3; b < 1.8; b += 0.1) {
            const auto o = order1_analysis(0.0, 0.0, b, b, g, 2.0);
            CHECK(o.cond_4_1() == o.cond_stationary_w_r);
            CHECK(o.growth_rate == Approx(b * b).epsilon(1e-10));
        }
    }
    SECTION("exponent against a long collapsed run") {
        const auto o = order1_analysis(0.5, -0.3, 0.8, 1.1, g, 2.0);
        LyapOptions lo;
        lo.n_steps = 400000;
        const auto est = estimate_lyapunov(models::tar_arch1(0.5, -0.3, 0.8, 1.1), g, lo, RandomStream(2));
        CHECK(within(est.mean_logw, o.log_rho, est.se));
        CHECK(o.pi_minus + o.pi_plus == Approx(1.0));
    }
}

TEST_CASE("kappa solver preconditions", "[moments]") {
    const auto g = ErrorDist::gaussian();
    CHECK_THROWS_AS(solve_kappa(models::arch({2.0}), g, 0.5, 4.0, 0.05, small_growth(), RandomStream(1), 20000),
                    PreconditionError);
    // both ends below 1
    CHECK_THROWS_AS(solve_kappa(models::arch({1.0}), g, 0.5, 1.0, 0.05, small_growth(), RandomStream(1), 20000),
                    BracketError);
}

TEST_CASE("kappa for ARCH(1) with b = 1", "[moments]") {
    auto o = small_growth(6000);
    o.n_max = 20;
    const auto sol = solve_kappa(models::arch({1.0}), ErrorDist::gaussian(), 1.0, 3.5, 0.05, o, RandomStream(4), 50000);
    CHECK(sol.converged);
    CHECK(sol.kappa == Approx(2.0).margin(0.05));
    CHECK(sol.log_rho < 0.0);
}
