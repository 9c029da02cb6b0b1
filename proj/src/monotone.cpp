#include "blowup/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "blowup/dynamics.hpp"

namespace blowup {

namespace {

// System whose control term is a fixed drift t -> g(t), for integrating the
// comparison equation with the chart machinery.
ControlSystem with_drift(const ControlSystem& sys, std::function<Vec(double)> drift,
                         const Vec& y0) {
    ControlSystem out = sys;
    out.y0 = y0;
    ControlGeometry geo;
    geo.kind = ControlKind::FiniteSet;
    geo.dim_u = 1;
    geo.values = {Vec{0.0}};
    geo.b = [drift](double t, const Vec&) { return drift(t); };
    geo.bound = [drift, n = sys.n](double t0, double t1) {
        double m = 0.0;
        for (int i = 0; i <= 64; ++i) m = std::max(m, norm(drift(t0 + (t1 - t0) * i / 64.0)));
        return m;
    };
    out.controls = std::move(geo);
    return out;
}

// Phi(|y|) from a radial point, exact in the compact chart.
double phi_inverse_radius(const ControlSystem& sys, const RadialPoint& rp) {
    return rp.chart == Chart::Compact ? rp.rad : sys.compactifier.Phi(rp.rad);
}

GapSample gap_from_points(const ControlSystem& sys, const RadialPoint& hat,
                          const RadialPoint& tilde, double t) {
    GapSample g;
    g.t = t;
    g.X = phi_inverse_radius(sys, hat) - phi_inverse_radius(sys, tilde);
    g.Theta_norm = norm(sub(hat.theta, tilde.theta));
    g.gap = g.X - g.Theta_norm;
    return g;
}

}  // namespace

GapSample gap(const ControlSystem& sys, const Vec& y_hat, const Vec& y_tilde) {
    if (!sys.compactifier.Phi) throw PreconditionError("gap requires a compactifier");
    const double r_hat = norm(y_hat), r_tilde = norm(y_tilde);
    const double s_hat = r_hat > 0.0 ? sys.compactifier.Phi(r_hat)
                                     : std::numeric_limits<double>::infinity();
    const double s_tilde = r_tilde > 0.0 ? sys.compactifier.Phi(r_tilde)
                                         : std::numeric_limits<double>::infinity();
    if (!std::isfinite(s_hat) || !std::isfinite(s_tilde) || s_hat <= 0.0 || s_tilde <= 0.0)
        throw PreconditionError("gap: radius below the chart domain of Phi");
    GapSample g;
    g.t = 0.0;
    g.X = s_hat - s_tilde;
    g.Theta_norm = norm(sub(scaled(y_hat, 1.0 / r_hat), scaled(y_tilde, 1.0 / r_tilde)));
    g.gap = g.X - g.Theta_norm;
    return g;
}

namespace {

struct GapRun {
    bool ok = false;
    std::string why;
    double min_increment = 0.0, max_abs_gap = 0.0, gap_start = 0.0, gap_end = 0.0;
    std::vector<GapSample> series;
};

GapRun run_gap_samples(const ControlSystem& sys, const std::function<Vec(double)>& drift,
                       const Vec& y_hat0, const Vec& y_tilde0, double t0, double T,
                       const ThresholdBundle& bundle, int grid_points, double rel_tol,
                       double abs_tol) {
    GapRun out;
    IntegrateOptions io;
    io.rel_tol = rel_tol;
    io.abs_tol = abs_tol;
    io.t_max = T;
    io.rho_hint = bundle.rho;

    Trajectory tr_hat, tr_tilde;
    try {
        tr_hat = integrate(with_drift(sys, drift, y_hat0), ControlLaw::constant({0.0}), io);
        tr_tilde = integrate(with_drift(sys, drift, y_tilde0), ControlLaw::constant({0.0}), io);
    } catch (const Error& e) {
        out.why = std::string("integration failed on [t0,T]: ") + e.what();
        return out;
    }
    if (tr_hat.blowup || tr_tilde.blowup) {
        out.why = "interval not pre-blowup: a solution blows up before T";
        return out;
    }

    const ControlSystem sys_hat = with_drift(sys, drift, y_hat0);
    TrajectoryView vh(sys_hat, tr_hat), vt(sys_hat, tr_tilde);
    double prev = 0.0;
    double min_inc = std::numeric_limits<double>::infinity();
    double max_abs = 0.0;
    out.series.reserve(static_cast<size_t>(grid_points));
    for (int j = 0; j < grid_points; ++j) {
        const double t = t0 + (T - t0) * j / (grid_points - 1);
        const GapSample g = gap_from_points(sys, vh.radial(t), vt.radial(t), t);
        out.series.push_back(g);
        max_abs = std::max(max_abs, std::abs(g.gap));
        if (j == 0)
            out.gap_start = g.gap;
        else
            min_inc = std::min(min_inc, g.gap - prev);
        prev = g.gap;
    }
    out.gap_end = prev;
    out.min_increment = min_inc;
    out.max_abs_gap = max_abs;
    out.ok = true;
    return out;
}

}  // namespace

std::vector<GapSample> gap_series(const ControlSystem& sys,
                                  const std::function<Vec(double)>& drift, const Vec& y_hat0,
                                  const Vec& y_tilde0, double t0, double T,
                                  const ThresholdBundle& bundle, const MonotoneOptions& opts) {
    GapRun run = run_gap_samples(sys, drift, y_hat0, y_tilde0, t0, T, bundle,
                                 opts.grid_points, opts.rel_tol, opts.abs_tol);
    if (!run.ok) throw PreconditionError(run.why);
    return run.series;
}

MonotoneResult certify_monotone(const ControlSystem& sys,
                                const std::function<Vec(double)>& drift, const Vec& y_hat0,
                                const Vec& y_tilde0, double t0, double T,
                                const ThresholdBundle& bundle, const MonotoneOptions& opts) {
    MonotoneResult res;

    // Hypothesis gate, reported distinctly from a monotonicity failure.
    if (!(norm(y_hat0) > bundle.rho)) {
        res.detail = "|y_hat0| <= rho";
        return res;
    }
    GapSample g0;
    try {
        g0 = gap(sys, y_hat0, y_tilde0);
    } catch (const PreconditionError& e) {
        res.detail = e.what();
        return res;
    }
    if (!(g0.gap > 0.0)) {
        res.detail = "initial gap (3.11) not positive";
        return res;
    }
    for (int i = 0; i <= 64; ++i) {
        const double t = t0 + (T - t0) * i / 64.0;
        if (norm(drift(t)) > bundle.M * (1.0 + 1e-9)) {
            res.detail = "drift exceeds the bundle bound M";
            return res;
        }
    }
    if (!(T > t0)) {
        res.detail = "empty interval";
        return res;
    }

    GapRun run = run_gap_samples(sys, drift, y_hat0, y_tilde0, t0, T, bundle,
                                 opts.grid_points, opts.rel_tol, opts.abs_tol);
    if (!run.ok) {
        res.detail = run.why;
        return res;
    }

    auto passes = [&](const GapRun& r) {
        return r.min_increment >= -opts.slack_scale * (1.0 + r.max_abs_gap);
    };

    if (!passes(run)) {
        // Confirm at 4x resolution before reporting a lemma violation.
        GapRun fine = run_gap_samples(sys, drift, y_hat0, y_tilde0, t0, T, bundle,
                                      4 * opts.grid_points, opts.rel_tol * 1e-2,
                                      opts.abs_tol * 1e-2);
        res.reran_fine = true;
        run = fine;
    }

    res.status = passes(run) ? MonotoneResult::Status::Pass : MonotoneResult::Status::Fail;
    res.min_increment = run.min_increment;
    res.max_abs_gap = run.max_abs_gap;
    res.gap_start = run.gap_start;
    res.gap_end = run.gap_end;
    if (res.status == MonotoneResult::Status::Fail) res.detail = "gap decreased beyond slack";
    return res;
}

MonotoneInstance random_instance(const ControlSystem& sys, const ThresholdBundle& bundle,
                                 uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = sys.n;
    const double rho = bundle.rho, M = bundle.M;

    MonotoneInstance inst;
    inst.seed = seed;
    inst.t0 = 0.0;

    const double r_hat = rho * (1.05 + 1.95 * unit(rng));
    const double r_tilde = r_hat * (1.1 + 0.9 * unit(rng));

    Vec theta_hat(static_cast<size_t>(n), 0.0);
    if (n == 1) {
        theta_hat[0] = 1.0;
    } else {
        for (auto& v : theta_hat) v = std::normal_distribution<double>(0.0, 1.0)(rng);
        theta_hat = scaled(theta_hat, 1.0 / norm(theta_hat));
    }
    // Angular separation: chord uniform in [0, 0.9*(Phi(r_hat)-Phi(r_tilde))]
    // keeps the (3.11) margin >= 10% by construction.
    Vec theta_tilde = theta_hat;
    if (n >= 2) {
        const double dPhi =
            sys.compactifier.Phi(r_hat) - sys.compactifier.Phi(r_tilde);
        const double chord = 0.9 * dPhi * unit(rng);
        const double angle = 2.0 * std::asin(std::min(1.0, 0.5 * chord));
        // Rotate theta_hat by `angle` in the plane spanned with a random
        // orthogonal direction.
        Vec w(static_cast<size_t>(n), 0.0);
        for (auto& v : w) v = std::normal_distribution<double>(0.0, 1.0)(rng);
        axpy(w, -dot(w, theta_hat), theta_hat);
        const double wn = norm(w);
        if (wn > 1e-12) {
            w = scaled(w, 1.0 / wn);
            theta_tilde = add(scaled(theta_hat, std::cos(angle)), scaled(w, std::sin(angle)));
        }
    }
    inst.y_hat0 = scaled(theta_hat, r_hat);
    inst.y_tilde0 = scaled(theta_tilde, r_tilde);

    // Piecewise-constant drift, 4 pieces, |drift| <= M.
    const int pieces = 4;
    std::vector<Vec> dv;
    for (int i = 0; i < pieces; ++i) {
        Vec d(static_cast<size_t>(n), 0.0);
        for (auto& v : d) v = std::normal_distribution<double>(0.0, 1.0)(rng);
        const double dn = norm(d);
        const double mag = 0.999 * M * unit(rng);
        dv.push_back(dn > 1e-12 ? scaled(d, mag / dn) : Vec(static_cast<size_t>(n), 0.0));
    }

    // Horizon: 80% of the blowup time of the larger solution under the drift.
    // The drift grid spans twice the drift-free estimate and holds its last
    // value beyond.
    IntegrateOptions io;
    io.rho_hint = bundle.rho;
    ControlSystem probe = sys;
    probe.y0 = inst.y_tilde0;
    const double T_free =
        blowup_time(probe, ControlLaw::constant(Vec(
                               static_cast<size_t>(probe.controls.dim_u), 0.0)),
                    io)
            .first;

    const double H = 2.0 * T_free;
    std::vector<double> breaks;
    for (int i = 0; i < pieces; ++i) breaks.push_back(H * i / pieces);
    inst.drift_breaks = breaks;
    inst.drift_values = dv;
    inst.drift = [breaks, dv](double t) {
        size_t idx = 0;
        while (idx + 1 < breaks.size() && t >= breaks[idx + 1]) ++idx;
        return dv[idx];
    };

    ControlSystem tilde_sys = with_drift(sys, inst.drift, inst.y_tilde0);
    const double T_blow =
        blowup_time(tilde_sys, ControlLaw::constant({0.0}), io).first;
    inst.T = 0.8 * T_blow;
    return inst;
}

}  // namespace blowup
