#include <doctest.h>

#include <cmath>
#include <sstream>

#include "blowup/dynamics.hpp"
#include "blowup/growth.hpp"
#include "oracles.hpp"

using namespace blowup;

namespace {
const auto g_one = [](double) { return 1.0; };

ControlSystem power_system(double p, double beta, double y0) {
    return make_catalog_system(GrowthKind::Power, p, beta, g_one, 1, Mat::zero(1, 1),
                               no_control(1), {y0});
}

ControlSystem controlled_scalar(double y0, double radius = 1.0) {
    return make_catalog_system(GrowthKind::Power, 2.0, 2.0, g_one, 1, Mat::zero(1, 1),
                               linear_ball(Mat::identity(1), radius), {y0});
}
}  // namespace

TEST_CASE("closed-form blowup times") {
    IntegrateOptions opts;
    SUBCASE("uncontrolled power p=2") {
        auto [T1, e1] = blowup_time(power_system(2.0, 2.0, 1.0), ControlLaw::constant({0.0}),
                                    opts);
        CHECK(std::abs(T1 - 1.0) <= 1e-6);
        auto [T2, e2] = blowup_time(power_system(2.0, 2.0, 2.0), ControlLaw::constant({0.0}),
                                    opts);
        CHECK(std::abs(T2 - 0.5) <= 1e-6);
    }
    SUBCASE("p=3") {
        auto [T, e] = blowup_time(power_system(3.0, 0.6, 1.0), ControlLaw::constant({0.0}),
                                  opts);
        CHECK(std::abs(T - 0.5) <= 1e-6);
    }
    SUBCASE("constant aid: y' = y^2 + 1 from 0") {
        auto [T, e] = blowup_time(controlled_scalar(0.0), ControlLaw::constant({1.0}), opts);
        CHECK(std::abs(T - M_PI / 2.0) <= 1e-6);
    }
    SUBCASE("exponential growth: T = -ln(1 - e^{-y0})") {
        ControlSystem sys = make_catalog_system(GrowthKind::Exponential, 2.0, 2.0, g_one, 1,
                                                Mat::zero(1, 1), no_control(1), {1.0});
        auto [T, e] = blowup_time(sys, ControlLaw::constant({0.0}), opts);
        CHECK(std::abs(T - (-std::log1p(-std::exp(-1.0)))) <= 1e-6);
    }
    SUBCASE("logpower growth against the quadrature oracle") {
        ControlSystem sys = make_catalog_system(GrowthKind::LogPower, 2.0, 2.0, g_one, 1,
                                                Mat::zero(1, 1), no_control(1), {3.0});
        auto [T, e] = blowup_time(sys, ControlLaw::constant({0.0}), opts);
        const double oracle = oracles::tail(
            [](double r) { return 1.0 / (r * std::pow(std::log1p(r), 2.0)); }, 3.0);
        CHECK(std::abs(T - oracle) <= 1e-6);
    }
}

TEST_CASE("no blowup cases") {
    IntegrateOptions opts;
    opts.t_max = 2.0;
    SUBCASE("zero growth stays constant") {
        ControlSystem sys;
        sys.n = 2;
        sys.y0 = {1.0, 0.0};
        sys.growth.G = [](double, double) { return 0.0; };
        sys.growth.G_r = [](double, double) { return 0.0; };
        sys.drift = zero_drift(2);
        sys.controls = no_control(2);
        finalize_system(sys);
        const Trajectory traj = integrate(sys, ControlLaw::constant({0.0, 0.0}), opts);
        CHECK_FALSE(traj.blowup.has_value());
        const Vec yT = TrajectoryView(sys, traj).y(opts.t_max);
        CHECK(yT[0] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(yT[1] == doctest::Approx(0.0));
        CHECK_THROWS_AS(blowup_time(sys, ControlLaw::constant({0.0, 0.0}), opts),
                        NoBlowupError);
    }
    SUBCASE("equilibrium of y^2 - 1 at y0 = 1") {
        ControlSystem sys = controlled_scalar(1.0);
        CHECK_THROWS_AS(blowup_time(sys, ControlLaw::constant({-1.0}), opts), NoBlowupError);
    }
}

TEST_CASE("trajectory structure invariants") {
    IntegrateOptions opts;
    const ControlSystem sys = power_system(2.0, 2.0, 1.0);
    const Trajectory traj = integrate(sys, ControlLaw::constant({0.0}), opts);
    REQUIRE(traj.blowup.has_value());
    for (size_t i = 1; i < traj.samples.size(); ++i)
        CHECK(traj.samples[i].t > traj.samples[i - 1].t);
    for (const auto& s : traj.samples) {
        if (s.chart == Chart::Compact) {
            CHECK(norm(s.state) > 0.0);
            CHECK(norm(s.state) < sys.compactifier.s0);
        } else {
            CHECK(std::isfinite(norm(s.state)));
        }
    }
    CHECK(norm(traj.samples.back().state) <= traj.eps_blow * (1.0 + 1e-12));
    CHECK(traj.samples.back().chart == Chart::Compact);
    CHECK(traj.n_switches >= 1);
    // Dense output reproduces the closed form 1/(1-t) through both charts.
    TrajectoryView view(sys, traj);
    for (double t : {0.2, 0.7, 0.95, 0.999}) {
        CHECK(view.radius(t) == doctest::Approx(1.0 / (1.0 - t)).epsilon(1e-7));
    }
}

TEST_CASE("radial monotonicity above the threshold radius") {
    ControlSystem sys = make_catalog_system(GrowthKind::Power, 2.0, 2.0, g_one, 2,
                                            Mat::zero(2, 2), finite_set({{0.5, -0.5}}),
                                            {40.0, 0.0});
    const ThresholdBundle b = rho_threshold(sys, 1.0, 1.0);
    REQUIRE(norm(sys.y0) > b.rho);
    IntegrateOptions opts;
    opts.rho_hint = b.rho;
    const Trajectory traj = integrate(sys, ControlLaw::constant({0.5, -0.5}), opts);
    double prev = 0.0;
    for (const auto& s : traj.samples) {
        const double r = outer_radius(sys, s);
        CHECK(r >= prev - 1e-9 * std::max(1.0, r));
        prev = r;
    }
}

TEST_CASE("scaling law for autonomous power growth") {
    IntegrateOptions opts;
    for (double p : {2.0, 3.0}) {
        const double beta = (p < 2.5) ? 2.0 : 0.6;
        for (double lambda : {2.0, 4.0}) {
            const double y0 = 1.0;
            auto [T1, e1] =
                blowup_time(power_system(p, beta, y0), ControlLaw::constant({0.0}), opts);
            auto [T2, e2] = blowup_time(power_system(p, beta, lambda * y0),
                                        ControlLaw::constant({0.0}), opts);
            CHECK(std::abs(T2 - std::pow(lambda, 1.0 - p) * T1) / T1 <= 1e-5);
        }
    }
}

TEST_CASE("tail bound consistency with the zeta structure") {
    // After radius R, the remaining time is at most int_R^inf dr/zeta(r).
    const ControlSystem sys = power_system(2.0, 2.0, 2.0);
    IntegrateOptions opts;
    const Trajectory traj = integrate(sys, ControlLaw::constant({0.0}), opts);
    REQUIRE(traj.blowup.has_value());
    TrajectoryView view(sys, traj);
    const double R = 10.0;
    // locate the radius crossing by bisection on the dense output
    double lo = 0.0, hi = traj.blowup->T_hat * (1.0 - 1e-9);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (view.radius(mid) < R ? lo : hi) = mid;
    }
    const double zeta_tail = oracles::tail([](double r) { return 2.0 / (r * r); }, R);
    CHECK(traj.blowup->T_hat - hi <= zeta_tail + 1e-8);
}

TEST_CASE("chart invariance under a doubled switch radius") {
    const ControlSystem sys = power_system(2.0, 2.0, 1.0);
    IntegrateOptions a, b;
    b.switch_radius = 2e3;
    const Trajectory ta = integrate(sys, ControlLaw::constant({0.0}), a);
    const Trajectory tb = integrate(sys, ControlLaw::constant({0.0}), b);
    REQUIRE(ta.blowup.has_value());
    REQUIRE(tb.blowup.has_value());
    const double budget = ta.blowup->err + tb.blowup->err + 1e-10;
    CHECK(std::abs(ta.blowup->T_hat - tb.blowup->T_hat) <= budget);
}

TEST_CASE("chattering converges to the averaged drift") {
    const ControlSystem sys = controlled_scalar(2.0);
    IntegrateOptions opts;
    SUBCASE("lambda = 1 reproduces the constant control") {
        const ChatterResult cr =
            chatter_convergence(sys, {1.0}, {-1.0}, 1.0, {0.1, 0.033}, opts);
        const double T_plus = oracles::plus_one_blowup_time(2.0);
        for (const auto& [h, T] : cr.by_period) CHECK(T == doctest::Approx(T_plus).epsilon(1e-8));
        CHECK(cr.T_avg == doctest::Approx(T_plus).epsilon(1e-8));
    }
    SUBCASE("lambda = 1/2 against the exact chattering map") {
        const ChatterResult cr =
            chatter_convergence(sys, {1.0}, {-1.0}, 0.5, {0.1, 0.05}, opts);
        CHECK(cr.T_avg == doctest::Approx(0.5).epsilon(1e-8));
        for (const auto& [h, T] : cr.by_period) {
            const double exact = oracles::chatter_exact(h, 0.5, 2.0);
            CHECK(T == doctest::Approx(exact).epsilon(1e-7));
        }
        // spec-scale sanity: |T(0.05) - 0.5| <= 1e-2
        CHECK(std::abs(cr.by_period.back().second - 0.5) <= 1e-2);
    }
}

TEST_CASE("chart oscillation aborts after ten re-entries") {
    // Zero growth with a strong alternating drift shoves the radius back and
    // forth across the switch threshold.
    ControlSystem sys;
    sys.n = 1;
    sys.y0 = {999.0};
    sys.growth.G = [](double, double) { return 0.0; };
    sys.growth.G_r = [](double, double) { return 0.0; };
    sys.drift = zero_drift(1);
    sys.controls = finite_set({{3000.0}, {-3000.0}});
    sys.compactifier =
        make_catalog_system(GrowthKind::Power, 2.0, 2.0, [](double) { return 1.0; }, 1,
                            Mat::zero(1, 1), no_control(1), {1.0})
            .compactifier;
    sys.growth_over_phi_d1 = nullptr;
    sys.growth_over_r_at_phi = nullptr;
    sys.growth_r_at_phi = nullptr;
    finalize_system(sys);

    // Drive |y| between 400 and 1100: every cycle crosses the switch radius
    // (1000) upward and the re-entry radius (500) downward.
    std::vector<double> bp = {0.0};
    std::vector<Vec> vals = {{3000.0}};
    double t = (1100.0 - 999.0) / 3000.0;
    for (int i = 0; i < 40; ++i) {
        bp.push_back(t);
        vals.push_back(i % 2 == 0 ? Vec{-3000.0} : Vec{3000.0});
        t += 700.0 / 3000.0;
    }
    IntegrateOptions opts;
    opts.t_max = 12.0;
    CHECK_THROWS_AS(integrate(sys, ControlLaw::piecewise(bp, vals), opts), ChartFailure);
}

TEST_CASE("integrate rejects feedback laws and bad thresholds") {
    const ControlSystem sys = power_system(2.0, 2.0, 1.0);
    IntegrateOptions opts;
    CHECK_THROWS_AS(
        integrate(sys, ControlLaw::costate_feedback([](double, const Vec& p) { return p; }),
                  opts),
        PreconditionError);
    IntegrateOptions bad;
    bad.eps_blow = sys.compactifier.s0;  // outside (0, s0/10)
    CHECK_THROWS_AS(integrate(sys, ControlLaw::constant({0.0}), bad), ConfigError);
}

TEST_CASE("trajectory csv round trip") {
    const ControlSystem sys = controlled_scalar(2.0);
    IntegrateOptions opts;
    const Trajectory traj = integrate(sys, ControlLaw::constant({1.0}), opts);
    std::stringstream ss;
    write_trajectory_csv(ss, traj);
    const Trajectory back = read_trajectory_csv(ss, sys);
    REQUIRE(back.samples.size() == traj.samples.size());
    for (size_t i = 0; i < traj.samples.size(); i += 17) {
        CHECK(back.samples[i].t == traj.samples[i].t);
        CHECK(back.samples[i].chart == traj.samples[i].chart);
        CHECK(back.samples[i].state == traj.samples[i].state);
        CHECK(back.samples[i].u == traj.samples[i].u);
    }
    const auto j = trajectory_summary(traj);
    CHECK(j.at("T_hat").get<double>() == doctest::Approx(traj.blowup->T_hat));
    CHECK(j.at("switches").get<int>() == traj.n_switches);
}
