#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tarch/model.hpp"
#include "tarch/rng.hpp"

using namespace tarch;
using Catch::Approx;

namespace {

RegimeCoeffs rc(double a0, std::vector<double> avec, double b0, std::vector<double> bvec) {
    return RegimeCoeffs{a0, std::move(avec), b0, std::move(bvec)};
}

ModelSpec random_threshold_model(RandomStream& rs) {
    std::vector<std::vector<double>> planes = {{1.0, 0.0, 0.0}, {1.0, -0.5, 0.3}};
    std::map<Pattern, RegimeCoeffs> regs;
    for (Pattern pat = 0; pat < 4; ++pat) {
        RegimeCoeffs r;
        r.a0 = rs.normal();
        r.b0 = 0.5 + rs.uniform();
        for (int k = 0; k < 3; ++k) {
            r.avec.push_back(rs.normal() * 0.5);
            r.bvec.push_back(rs.uniform());
        }
        regs[pat] = r;
    }
    return ModelSpec(3, planes, regs);
}

}  // namespace

TEST_CASE("eval_ab on single-regime models", "[model]") {
    const auto m1 = ModelSpec::single(rc(0.0, {0.5}, 1.0, {0.0}));
    const std::vector<double> x1{2.0};
    CHECK(eval_ab(m1, x1).a == 1.0);
    CHECK(eval_ab(m1, x1).b == 1.0);

    const auto m2 = ModelSpec::single(rc(0.0, {0.0, 0.0}, 0.0, {1.0, 1.0}));
    const std::vector<double> x2{3.0, 4.0};
    CHECK(eval_ab(m2, x2).a == 0.0);
    CHECK(eval_ab(m2, x2).b == Approx(5.0).epsilon(1e-15));
}

TEST_CASE("eval_ab picks the regime by sign pattern", "[model]") {
    const ModelSpec m(1, {{1.0}}, std::map<std::string, RegimeCoeffs>{{"-", rc(0.0, {0.3}, 2.0, {0.0})},
                                                                      {"+", rc(0.0, {0.9}, 1.0, {0.0})}});
    const std::vector<double> x{-1.0};
    const AB ab = eval_ab(m, x);
    CHECK(ab.a == Approx(-0.3));
    CHECK(ab.b == 2.0);
    // zero counts as +
    const std::vector<double> zero{0.0};
    CHECK(m.pattern_of(zero) == 0u);
    CHECK(m.pattern_string(m.pattern_of(x)) == "-");
}

TEST_CASE("eval_z and eval_w", "[model]") {
    const auto arch2 = ModelSpec::single(rc(0.0, {0.0, 0.0}, 1.0, {1.0, 1.0}));
    CHECK(eval_z(arch2, SphereState({1.0, 0.0}), 2.0) == Approx(2.0));
    CHECK(eval_w(arch2, SphereState({1.0, 0.0}), 0.0) == Approx(1.0));
    CHECK(eval_w(arch2, SphereState({0.0, 1.0}), 0.0) == 0.0);

    const auto tar = models::tar_arch1(0.5, 0.2, 0.1, 0.3);
    CHECK(eval_z(tar, SphereState({-1.0}), 5.0) == Approx(0.0).margin(1e-15));
    CHECK(eval_z(tar, SphereState({-1.0}), 0.0) == Approx(-0.5));

    const auto arch1 = models::arch({0.7});
    for (double u : {-2.0, -0.1, 0.0, 1.3})
        for (double s : {-1.0, 1.0}) CHECK(eval_w(arch1, SphereState({s}), u) == Approx(std::abs(0.7 * u)));
}

TEST_CASE("homogeneity, w bounds and intercept negligibility", "[model][property]") {
    RandomStream rs(123);
    const ModelSpec m = random_threshold_model(rs);
    for (int i = 0; i < 500; ++i) {
        const auto th = rs.sphere_point(3);
        const double c = std::exp(4.0 * rs.normal());
        std::vector<double> cx = th;
        for (auto& v : cx) v *= c;
        const AB h = eval_ab_star(m, th), hc = eval_ab_star(m, cx);
        CHECK(hc.a == Approx(c * h.a).epsilon(1e-12).margin(1e-12 * c));
        CHECK(hc.b == Approx(c * h.b).epsilon(1e-12));

        const double u = 3.0 * rs.normal();
        const double z = eval_z(m, th, u), w = eval_w(m, th, u);
        CHECK(std::abs(z) <= w * (1 + 1e-15));
        CHECK(w <= std::abs(z) + 1.0 + 1e-15);

        std::vector<double> big = th;
        for (auto& v : big) v *= 1e6;
        const AB full = eval_ab(m, big);
        CHECK(std::abs(full.a / 1e6 - h.a) < 1e-5);
        CHECK(std::abs(full.b / 1e6 - h.b) < 1e-5);
    }
}

TEST_CASE("SphereState renormalizes", "[model]") {
    SphereState s({3.0, 4.0});
    CHECK(s.norm_error() <= 1e-12);
    CHECK(s.theta[0] == Approx(0.6));
    CHECK_THROWS_AS(SphereState({0.0, 0.0}), DomainError);
}

TEST_CASE("hyperplane validation and attainable patterns", "[model]") {
    const auto r = rc(0.0, {0.0, 0.0}, 1.0, {0.5, 0.5});
    // normal with negative leading coordinate is rejected
    CHECK_THROWS_AS(ModelSpec(2, {{-1.0, 0.0}}, std::map<std::string, RegimeCoeffs>{{"+", r}, {"-", r}}), ConfigError);
    // missing regime for an attainable pattern
    CHECK_THROWS_AS(ModelSpec(2, {{1.0, 0.0}}, std::map<std::string, RegimeCoeffs>{{"+", r}}), ConfigError);
    // leading coordinate rescaled to 1
    const ModelSpec m(2, {{2.0, 2.0}}, std::map<std::string, RegimeCoeffs>{{"+", r}, {"-", r}});
    CHECK(m.hyperplanes()[0][0] == 1.0);
    CHECK(m.hyperplanes()[0][1] == 1.0);
    // two parallel planes: +- is unreachable and may be left out
    const ModelSpec par(2, {{1.0, 0.0}, {1.0, 0.0}},
                        std::map<std::string, RegimeCoeffs>{{"++", r}, {"--", r}});
    CHECK(par.attainable_patterns().size() == 2);
    // bad coefficient sizes and negative b
    CHECK_THROWS_AS(ModelSpec::single(rc(0.0, {0.0}, 1.0, {0.5, 0.5})), ConfigError);
    CHECK_THROWS_AS(ModelSpec::single(rc(0.0, {0.0}, 1.0, {-0.5})), ConfigError);
}

TEST_CASE("FCAR representation reproduces a and b", "[model]") {
    const auto lin1 = ModelSpec::single(rc(0.0, {1.0}, 1.0, {0.0}));
    const std::vector<double> x{3.0};
    const FcarCoeffs c = fcar_representation(lin1, x);
    CHECK(c.a[0] == Approx(0.75));
    CHECK(c.a[1] == Approx(0.75));
    CHECK(fcar_reconstruct_a(c, x) == Approx(3.0).epsilon(1e-12));

    const std::vector<double> zero{0.0};
    const FcarCoeffs c0 = fcar_representation(models::tar_arch1(0.2, 0.4, 1.0, 1.0, 0.7), zero);
    CHECK(c0.a[0] == Approx(0.7));
    CHECK(c0.a[1] == 0.0);

    const auto sum2 = ModelSpec::single(rc(0.0, {1.0, 1.0}, 1.0, {0.0, 0.0}));
    const std::vector<double> x2{1.0, 1.0};
    const FcarCoeffs c2 = fcar_representation(sum2, x2);
    CHECK(c2.a[0] == Approx(2.0 / 3.0));
    CHECK(c2.a[1] == Approx(2.0 / 3.0));
    CHECK(c2.a[2] == Approx(2.0 / 3.0));

    RandomStream rs(9);
    const ModelSpec m = random_threshold_model(rs);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> y(3);
        for (auto& v : y) v = 10.0 * rs.normal();
        const FcarCoeffs f = fcar_representation(m, y);
        const AB ab = eval_ab(m, y);
        CHECK(fcar_reconstruct_a(f, y) == Approx(ab.a).epsilon(1e-12).margin(1e-12));
        CHECK(fcar_reconstruct_b(f, y) == Approx(ab.b).epsilon(1e-12));
        for (std::size_t k = 0; k < f.a.size(); ++k) CHECK(std::abs(f.a[k]) <= std::abs(ab.a));
    }
}

TEST_CASE("assumption checks", "[model]") {
    const auto g = ErrorDist::gaussian();
    SECTION("ARCH(p) with positive coefficients passes everything") {
        const auto rep = check_assumptions(models::arch({0.4, 0.3, 0.2}), g);
        CHECK(rep.all_pass());
        CHECK(rep.entries.size() == 6);
        CHECK(rep.get("A.3").status == CheckStatus::pass);
        CHECK(rep.get("A.5").numerical_evidence);
    }
    SECTION("b identically zero fails A.1") {
        const auto rep = check_assumptions(ModelSpec::single(rc(0.0, {0.3, 0.0}, 0.0, {0.0, 0.0})), g);
        CHECK(rep.get("A.1").status == CheckStatus::fail);
        CHECK_FALSE(rep.all_pass());
    }
    SECTION("b* vanishing on an axial plane is a warning, not a failure") {
        const auto rep = check_assumptions(ModelSpec::single(rc(0.0, {0.0, 0.0}, 1.0, {1.0, 0.0})), g);
        const auto& a5 = rep.get("A.5");
        CHECK(a5.status == CheckStatus::pass);
        REQUIRE_FALSE(a5.warnings.empty());
        CHECK(a5.warnings.front().find("theta_1 = 0") != std::string::npos);
    }
    SECTION("A.2 reports the declared moment exponent") {
        const auto rep = check_assumptions(models::arch({0.5}), ErrorDist::student_t(4.0));
        CHECK(rep.get("A.2").status == CheckStatus::pass);
    }
}
