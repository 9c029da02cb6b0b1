#include <doctest.h>

#include <cmath>

#include "blowup/dynamics.hpp"
#include "blowup/growth.hpp"
#include "oracles.hpp"

using namespace blowup;

namespace {
const auto g_one = [](double) { return 1.0; };

ControlSystem catalog(GrowthKind kind, double p = 2.0, double beta = 2.0, int n = 1,
                      Vec y0 = {1.0}) {
    return make_catalog_system(kind, p, beta, g_one, n, Mat::zero(n, n), no_control(n),
                               std::move(y0));
}

ControlSystem linear_growth_system(bool with_compactifier = false) {
    ControlSystem sys;
    sys.n = 1;
    sys.y0 = {1.0};
    sys.growth.G = [](double, double r) { return r; };
    sys.growth.G_r = [](double, double) { return 1.0; };
    sys.drift = zero_drift(1);
    sys.controls = no_control(1);
    if (with_compactifier)  // borrow the power chart so the rho search runs
        sys.compactifier = catalog(GrowthKind::Power).compactifier;
    finalize_system(sys);
    return sys;
}
}  // namespace

TEST_CASE("omega_T closed forms") {
    ControlSystem sys = catalog(GrowthKind::Power);
    CHECK(omega_T(sys, 1.0, 2.0).value == doctest::Approx(2.0));
    CHECK(omega_T(sys, 1.0, 36.0).value == doctest::Approx(36.0));
    CHECK(omega_T(sys, 1.0, 2.0).superlinear);

    ControlSystem lin = linear_growth_system();
    const OmegaTResult r = omega_T(lin, 1.0, 5.0);
    CHECK(r.value == doctest::Approx(1.0));
    CHECK_FALSE(r.superlinear);

    CHECK_THROWS_AS(omega_T(sys, 1.0, 0.0), PreconditionError);
}

TEST_CASE("rho_threshold finds the binding condition") {
    ControlSystem sys = catalog(GrowthKind::Power);
    // For power p=2, beta=2, g=1: Omega~(rho) = rho/2, so 18M binds at rho=36.
    const ThresholdBundle b = rho_threshold(sys, 1.0, 1.0);
    CHECK(b.rho == doctest::Approx(36.0).epsilon(0.05));
    CHECK(b.Omega_T >= 2.0);
    CHECK(b.rho > 2.0);
    CHECK(b.omega0 <= 1.0);
    CHECK(b.omega1 <= 1.0);
    CHECK(b.omega_val <= 1.0 / 5.0);
    CHECK(b.Omega_tilde >= 18.0);

    SUBCASE("drift-free bound is much smaller") {
        const ThresholdBundle b0 = rho_threshold(sys, 1.0, 0.0);
        CHECK(b0.rho < 36.0);
        CHECK(b0.Omega_T >= 1.0);
        CHECK(b0.rho > 0.0);
    }
    SUBCASE("linear growth is not satisfiable") {
        ControlSystem lin = linear_growth_system(true);
        RhoSearchOptions ro;
        ro.rho_max = 1e6;
        ro.grid = 120;
        CHECK_THROWS_AS(rho_threshold(lin, 1.0, 1.0, ro), NotSatisfiableError);
    }
}

TEST_CASE("threshold bundle survives re-evaluation at finer grids") {
    for (GrowthKind kind :
         {GrowthKind::Power, GrowthKind::LogPower, GrowthKind::Exponential}) {
        ControlSystem sys = catalog(kind);
        const ThresholdBundle b = rho_threshold(sys, 1.0, 1.0);
        RhoSearchOptions fine;
        fine.grid = 800;
        fine.t_grid = 66;
        const double r_cap = std::max(1e8, b.rho * fine.r_cap_factor);
        const OmegaTResult ot = omega_T(sys, 1.0, b.rho, r_cap, fine.grid);
        CHECK(ot.value >= (b.M + 1.0) * 0.99);
        // Re-evaluated quantities stay within 1% of the six (3.12) bounds.
        CHECK(sys.compactifier.omega(sys.compactifier.Phi(b.rho)) <=
              (1.0 / (4.0 * b.M + 1.0)) * 1.01);
    }
}

TEST_CASE("Omega_T and Omega~ are nondecreasing in rho") {
    for (GrowthKind kind :
         {GrowthKind::Power, GrowthKind::LogPower, GrowthKind::Exponential}) {
        ControlSystem sys = catalog(kind);
        double prev = -1e300;
        for (double rho : {5.0, 10.0, 20.0, 40.0, 80.0}) {
            const double v = omega_T(sys, 1.0, rho, 1e8, 200).value;
            CHECK(v >= prev * (1.0 - 1e-12));
            prev = v;
        }
    }
}

TEST_CASE("audit passes S2-S3 for the catalog kinds") {
    for (GrowthKind kind :
         {GrowthKind::Power, GrowthKind::LogPower, GrowthKind::Exponential}) {
        ControlSystem sys = catalog(kind);
        const AssumptionReport rep = audit(sys, 1.0);
        CHECK(rep.passed("S2"));
        CHECK(rep.passed("S3"));
        CHECK(rep.passed("P2"));
        CHECK(rep.passed("S4"));
    }
}

TEST_CASE("audit fails (3.3) for linear growth") {
    const AssumptionReport rep = audit(linear_growth_system(), 1.0);
    CHECK_FALSE(rep.passed("S2"));
    const AssumptionCheck* c = rep.find("S2");
    REQUIRE(c != nullptr);
    CHECK(c->status == CheckStatus::Fail);
}

TEST_CASE("zeta audit: domination and tail integral") {
    ControlSystem sys = make_catalog_system(GrowthKind::Power, 2.0, 2.0, g_one, 1,
                                            Mat::zero(1, 1),
                                            linear_ball(Mat::identity(1), 1.0), {2.0});
    const double R0 = std::max(2.0 * 0.0 + 2.0 * 1.0, 2.0);
    SUBCASE("r^2/2 passes with the exact integral") {
        BlowupLowerBound z;
        z.R0 = R0;
        z.zeta = [](double r) { return 0.5 * r * r; };
        sys.zeta = z;
        const AssumptionReport rep = audit(sys, 1.0);
        CHECK(rep.passed("P5"));
        CHECK(rep.find("P5")->witness.value == doctest::Approx(2.0 / R0).epsilon(1e-8));
    }
    SUBCASE("linear zeta diverges") {
        BlowupLowerBound z;
        z.R0 = R0;
        z.zeta = [](double r) { return r; };
        sys.zeta = z;
        const AssumptionReport rep = audit(sys, 1.0);
        // Note the domination side would also fail eventually; the report
        // records the first failing subcheck.
        CHECK_FALSE(rep.passed("P5"));
    }
    SUBCASE("absent zeta is not checkable") {
        const AssumptionReport rep = audit(sys, 1.0);
        CHECK(rep.find("P5")->status == CheckStatus::NotCheckable);
    }
}

TEST_CASE("audit report serializes with ids and witnesses") {
    const auto j = report_json(audit(catalog(GrowthKind::Power), 1.0));
    REQUIRE(j.is_array());
    bool saw_s3 = false;
    for (const auto& e : j) {
        CHECK(e.contains("id"));
        CHECK(e.contains("status"));
        CHECK(e.at("witness").contains("value"));
        if (e.at("id") == "S3") saw_s3 = true;
    }
    CHECK(saw_s3);
}

TEST_CASE("growth exponent integral") {
    ControlSystem sys = catalog(GrowthKind::Power, 2.0, 2.0, 1, {1.0});
    IntegrateOptions opts;
    const Trajectory traj = integrate(sys, ControlLaw::constant({0.0}), opts);
    const GrowthExponent ge = growth_exponent_integral(traj, sys);
    // Along y(s) = 1/(1-s) the integrand is |y|, so g(t) = -ln(1-t).
    CHECK(ge(0.0) == doctest::Approx(0.0));
    for (double t : {0.3, 0.6, 0.9}) {
        CHECK(ge(t) == doctest::Approx(-std::log(1.0 - t)).epsilon(1e-6));
    }
    CHECK_THROWS_AS(ge(traj.t_back() + 1.0), PreconditionError);

    SUBCASE("linear growth gives a vanishing exponent") {
        ControlSystem lin = linear_growth_system();
        IntegrateOptions lo;
        lo.t_max = 1.0;
        const Trajectory tl = integrate(lin, ControlLaw::constant({0.0}), lo);
        const GrowthExponent gl = growth_exponent_integral(tl, lin);
        CHECK(gl(0.5) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(gl(1.0) == doctest::Approx(0.0).epsilon(1e-12));
    }
}
