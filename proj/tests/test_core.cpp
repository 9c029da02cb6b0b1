#include <doctest.h>

#include <cmath>

#include "blowup/config.hpp"
#include "blowup/core.hpp"

using namespace blowup;

namespace {
const auto g_one = [](double) { return 1.0; };

ControlSystem catalog(GrowthKind kind, double p = 2.0, double beta = 2.0, int n = 1,
                      Vec y0 = {1.0}) {
    return make_catalog_system(kind, p, beta, g_one, n, Mat::zero(n, n), no_control(n),
                               std::move(y0));
}
}  // namespace

TEST_CASE("catalog power system matches the closed forms") {
    ControlSystem sys = catalog(GrowthKind::Power);
    CHECK(sys.growth.G(0.0, 3.0) == doctest::Approx(9.0));
    CHECK(sys.growth.G(0.7, 0.0) == 0.0);
    CHECK(sys.compactifier.phi(0.1) == doctest::Approx(100.0));
    CHECK(sys.compactifier.s0 == doctest::Approx(0.5 * std::pow(2.0, -0.5)));
    CHECK(sys.compactifier.phi(sys.compactifier.s0) > 2.0);
}

TEST_CASE("catalog exponential system uses the shifted growth") {
    ControlSystem sys = catalog(GrowthKind::Exponential, 2.0, 2.0);
    CHECK(sys.growth.G(0.0, 1.0) == doctest::Approx(std::exp(1.0) - 1.0));
    CHECK(sys.growth.G(0.3, 0.0) == 0.0);
    CHECK(sys.compactifier.phi(0.5) == doctest::Approx(std::log(1.0 + 4.0)));
}

TEST_CASE("catalog rejections") {
    CHECK_THROWS_AS(catalog(GrowthKind::Power, 1.0, 2.0), ConfigError);   // p <= 1
    CHECK_THROWS_AS(catalog(GrowthKind::Power, 2.0, 0.5), ConfigError);   // beta <= 1/(p-1)
    CHECK_THROWS_AS(catalog(GrowthKind::Power, 2.0, 1.0), ConfigError);   // boundary
    CHECK_THROWS_AS(catalog(GrowthKind::LogPower, 2.0, 0.9), ConfigError);
    CHECK_THROWS_AS(catalog(GrowthKind::Exponential, 2.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_catalog_system(GrowthKind::Power, 2.0, 2.0,
                                        [](double t) { return 1.0 - t; }, 1, Mat::zero(1, 1),
                                        no_control(1), {1.0}),
                    ConfigError);  // g goes nonpositive
    CHECK_THROWS_AS(catalog(GrowthKind::Power, 2.0, 2.0, 1, {1.0, 2.0}), ConfigError);
}

TEST_CASE("evaluate_rhs basics") {
    SUBCASE("unit state, no control") {
        ControlSystem sys = catalog(GrowthKind::Power, 2.0, 2.0, 2, {1.0, 0.0});
        const Vec f = evaluate_rhs(sys, 0.0, {1.0, 0.0}, sys.controls.values.front());
        CHECK(f[0] == doctest::Approx(1.0));
        CHECK(f[1] == doctest::Approx(0.0));
    }
    SUBCASE("zero state gives b(0,u)") {
        ControlSystem sys = make_catalog_system(GrowthKind::Power, 2.0, 2.0, g_one, 2,
                                                Mat::zero(2, 2),
                                                finite_set({{0.3, -0.4}}), {0.0, 0.0});
        const Vec f = evaluate_rhs(sys, 0.0, {0.0, 0.0}, {0.3, -0.4});
        CHECK(f[0] == doctest::Approx(0.3));
        CHECK(f[1] == doctest::Approx(-0.4));
    }
    SUBCASE("scalar direct substitution") {
        ControlSystem sys = make_catalog_system(GrowthKind::Power, 2.0, 2.0, g_one, 1,
                                                Mat::zero(1, 1),
                                                linear_ball(Mat::identity(1), 1.0), {2.0});
        const Vec f = evaluate_rhs(sys, 0.0, {2.0}, {-1.0});
        CHECK(f[0] == doctest::Approx(3.0));
    }
}

TEST_CASE("rhs is continuous across the origin along rays") {
    for (GrowthKind kind :
         {GrowthKind::Power, GrowthKind::LogPower, GrowthKind::Exponential}) {
        ControlSystem sys = make_catalog_system(kind, 2.0, 2.0, g_one, 2, Mat::zero(2, 2),
                                                finite_set({{0.5, 0.5}}), {0.0, 0.0});
        const Vec f0 = evaluate_rhs(sys, 0.0, {0.0, 0.0}, {0.5, 0.5});
        const Vec theta = {std::sqrt(0.5), -std::sqrt(0.5)};
        double prev = 1e300;
        for (double eps : {1e-3, 1e-6, 1e-9}) {
            const Vec f = evaluate_rhs(sys, 0.0, scaled(theta, eps), {0.5, 0.5});
            const double diff = norm(sub(f, f0));
            CHECK(diff < prev + 1e-15);
            prev = diff;
        }
        CHECK(prev < 1e-8);
    }
}

TEST_CASE("compactifier round trip and shape invariants") {
    for (GrowthKind kind :
         {GrowthKind::Power, GrowthKind::LogPower, GrowthKind::Exponential}) {
        ControlSystem sys = catalog(kind, 2.0, 2.0);
        const auto& cp = sys.compactifier;
        // Round trip on a log-spaced radius grid above phi(s0/2). For the
        // exponential kind Phi(r) = (e^r - 1)^{-1/beta} leaves double range
        // near r ~ beta*700, so its grid caps earlier.
        const double r_lo = cp.phi(0.5 * cp.s0);
        const double r_hi = (kind == GrowthKind::Exponential) ? 1e3 : 1e8;
        for (int i = 0; i <= 40; ++i) {
            const double r = r_lo * std::pow(r_hi / r_lo, i / 40.0);
            const double round = cp.phi(cp.Phi(r));
            CHECK(std::abs(round - r) / r <= 1e-9);
        }
        for (int i = 1; i <= 30; ++i) {
            const double s = cp.s0 * i / 31.0;
            CHECK(cp.phi(s) > 2.0);  // holds even where phi overflows
            CHECK(cp.phi_d1(s) < 0.0);
        }
        // Inverse identity on the upper half of (0, s0), inside double range
        // for every kind.
        for (int i = 16; i <= 30; ++i) {
            const double s = cp.s0 * i / 31.0;
            CHECK(cp.Phi(cp.phi(s)) == doctest::Approx(s).epsilon(1e-9));
        }
    }
}

TEST_CASE("derivatives match centered finite differences") {
    for (GrowthKind kind :
         {GrowthKind::Power, GrowthKind::LogPower, GrowthKind::Exponential}) {
        ControlSystem sys = catalog(kind, 2.0, 2.0);
        const auto& cp = sys.compactifier;
        // Interior grid: the logpower phi' reaches ~1e294 near s0/15, where a
        // fixed-relative FD step loses the last decimal digit.
        for (int i = 6; i <= 28; ++i) {
            const double s = cp.s0 * i / 31.0;
            const double h = s * 6e-6;
            const double fd1 = (cp.phi(s + h) - cp.phi(s - h)) / (2.0 * h);
            const double fd2 = (cp.phi_d1(s + h) - cp.phi_d1(s - h)) / (2.0 * h);
            CHECK(cp.phi_d1(s) == doctest::Approx(fd1).epsilon(1e-5));
            CHECK(cp.phi_d2(s) == doctest::Approx(fd2).epsilon(1e-5));
        }
        for (double r : {0.5, 1.0, 3.0, 7.0}) {
            const double h = r * 6e-6;
            const double fd = (sys.growth.G(0.0, r + h) - sys.growth.G(0.0, r - h)) / (2.0 * h);
            CHECK(sys.growth.G_r(0.0, r) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("control law validation and lookup") {
    CHECK_THROWS_AS(ControlLaw::piecewise({0.0, 0.0}, {{1.0}, {2.0}}), ConfigError);
    CHECK_THROWS_AS(ControlLaw::piecewise({0.0, 1.0}, {{1.0}}), ConfigError);
    const ControlLaw law = ControlLaw::piecewise({0.0, 1.0, 2.0}, {{1.0}, {2.0}, {3.0}});
    CHECK(law.value_at(0.0)[0] == 1.0);
    CHECK(law.value_at(0.999)[0] == 1.0);
    CHECK(law.value_at(1.0)[0] == 2.0);
    CHECK(law.value_at(5.0)[0] == 3.0);
    CHECK(law.next_breakpoint_after(0.5) == 1.0);
    CHECK(std::isinf(law.next_breakpoint_after(2.0)));
    const ControlLaw fb = ControlLaw::costate_feedback([](double, const Vec& p) { return p; });
    CHECK_THROWS_AS(fb.value_at(0.0), PreconditionError);
}

TEST_CASE("linear ball geometry invariants") {
    Mat B(2, 2);
    B(0, 0) = 2.0;
    B(1, 1) = 1.0;
    const ControlGeometry geo = linear_ball(B, 1.5);
    const Vec u = {0.9, -1.2};  // |u| = 1.5 on the sphere
    const Vec bu = geo.b(0.0, u);
    CHECK(bu[0] == doctest::Approx(1.8));
    CHECK(bu[1] == doctest::Approx(-1.2));
    CHECK(geo.bound(0.0, 1.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(linear_ball(B, 0.0), ConfigError);
}

TEST_CASE("system definition ingestible from JSON") {
    const auto j = nlohmann::json::parse(R"({
        "kind": "power", "p": 2.0, "beta": 2.0,
        "g": {"const": 1.0},
        "n": 2,
        "A": {"rotation": 0.5},
        "controls": {"ball": {"B": [[1,0],[0,1]], "radius": 1.0}},
        "y0": [2.0, 0.0],
        "zeta": {"R0": 2.0, "coeff": 0.5, "power": 2.0}
    })");
    const ControlSystem sys = system_from_json(j);
    CHECK(sys.n == 2);
    CHECK(sys.growth.G(0.0, 2.0) == doctest::Approx(4.0));
    CHECK(sys.drift.A(0.0)(0, 1) == doctest::Approx(-0.5));
    CHECK(sys.drift.norm_bound(0.0, 1.0) == doctest::Approx(0.5));
    CHECK(sys.controls.kind == ControlKind::LinearBall);
    REQUIRE(sys.zeta.has_value());
    CHECK(sys.zeta->zeta(2.0) == doctest::Approx(2.0));

    SUBCASE("tabulated coefficient") {
        auto j2 = j;
        j2["g"] = {{"table", {{0.0, 1.0}, {1.0, 3.0}}}};
        const ControlSystem s2 = system_from_json(j2);
        CHECK(s2.growth.G(0.5, 1.0) == doctest::Approx(2.0));
        CHECK(s2.growth.G(9.0, 1.0) == doctest::Approx(3.0));
    }
    SUBCASE("bad shapes rejected") {
        auto j2 = j;
        j2["y0"] = {1.0};
        CHECK_THROWS_AS(system_from_json(j2), ConfigError);
        auto j3 = j;
        j3["kind"] = "cubic";
        CHECK_THROWS_AS(system_from_json(j3), ConfigError);
        auto j4 = j;
        j4["A"] = {{"const", {{0.0, 1.0}}}};
        CHECK_THROWS_AS(system_from_json(j4), ConfigError);
    }
    SUBCASE("law section") {
        auto j2 = j;
        j2["law"] = {{"const", {0.5, 0.5}}};
        const ControlSystem s2 = system_from_json(j2);
        const ControlLaw law = law_from_json(j2, s2);
        CHECK(law.value_at(0.0) == Vec{0.5, 0.5});
        const ControlLaw none = law_from_json(j, sys);
        CHECK(none.value_at(3.0) == Vec{0.0, 0.0});
    }
}
