#include "blowup/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "blowup/rk.hpp"
#include "chart_loop.hpp"

namespace blowup {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Chart fields

Vec outer_field(const ControlSystem& sys, double t, const Vec& y, const Vec& u) {
    Vec f = mul(sys.drift.A(t), y);
    const Vec bu = sys.controls.b(t, u);
    for (size_t i = 0; i < f.size(); ++i) f[i] += bu[i];
    const double r = norm(y);
    if (r > 0.0) axpy(f, sys.growth.G(t, r) / r, y);
    return f;
}

// x = s*theta with s = Phi(|y|):
//   ds/dt     = [G(t,phi(s)) + <A theta, theta> phi(s) + <b, theta>] / phi'(s)
//   dtheta/dt = (I - theta theta^T)(A theta + b/phi(s))
// assembled from the stable composites so phi may overflow harmlessly.
Vec compact_field(const ControlSystem& sys, double t, const Vec& x, const Vec& u) {
    const size_t n = x.size();
    const double s = norm(x);
    Vec theta = scaled(x, 1.0 / s);
    const Mat A = sys.drift.A(t);
    const Vec Ath = mul(A, theta);
    const Vec bu = sys.controls.b(t, u);
    const double phi_d1 = sys.compactifier.phi_d1(s);
    const double inv_phi = 1.0 / sys.compactifier.phi(s);

    double ds = sys.growth_over_phi_d1(t, s) +
                dot(Ath, theta) * sys.compactifier.ratio_phi_d1(s) + dot(bu, theta) / phi_d1;

    Vec v(n);
    for (size_t i = 0; i < n; ++i) v[i] = Ath[i] + bu[i] * inv_phi;
    const double vth = dot(v, theta);
    Vec dx(n);
    for (size_t i = 0; i < n; ++i) dx[i] = ds * theta[i] + s * (v[i] - vth * theta[i]);
    return dx;
}

namespace detail {

// Adjoint coefficients: dpsi/dt = -(a psi + c <theta,psi> theta + A^T psi),
// a = G/r and c = G_r - G/r; in the compact chart both come from the stable
// composites. At r = 0 the design fallback is a = G_r(t,0), c = 0.
void adjoint_accumulate(const ControlSystem& sys, double t, Chart chart, const Vec& z,
                        const Vec& psi, Vec& dpsi) {
    const size_t n = psi.size();
    const double rad = norm(z);
    double a, c;
    Vec theta;
    if (chart == Chart::Outer) {
        if (rad > 0.0) {
            const double G = sys.growth.G(t, rad);
            a = G / rad;
            c = sys.growth.G_r(t, rad) - a;
            theta = scaled(z, 1.0 / rad);
        } else {
            a = sys.growth.G_r(t, 0.0);
            c = 0.0;
            theta.assign(n, 0.0);
        }
    } else {
        a = sys.growth_over_r_at_phi(t, rad);
        c = sys.growth_r_at_phi(t, rad) - a;
        theta = scaled(z, 1.0 / rad);
    }
    const Mat A = sys.drift.A(t);
    const Vec At_psi = mul_t(A, psi);
    const double th_psi = c != 0.0 ? dot(theta, psi) : 0.0;
    for (size_t i = 0; i < n; ++i)
        dpsi[i] = -(a * psi[i] + c * th_psi * theta[i] + At_psi[i]);
}

}  // namespace detail

namespace {

double block_norm(const Vec& z, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += z[i] * z[i];
    return std::sqrt(s);
}

}  // namespace

namespace detail {

ChartLoopResult run_chart_loop(const ChartLoopConfig& cfg, const ChartLoopStart& start,
                               bool record) {
    const ControlSystem& sys = *cfg.sys;
    const size_t n = static_cast<size_t>(sys.n);
    const bool coupled = cfg.with_costate;
    if (!cfg.law && !cfg.feedback)
        throw PreconditionError("chart loop needs an open-loop law or a costate feedback");
    if (cfg.feedback && !coupled)
        throw PreconditionError("costate feedback requires a coupled run");
    if (cfg.law && cfg.law->kind != ControlLaw::Kind::PiecewiseConstant)
        throw PreconditionError("law not evaluable on [0, t_max]: feedback laws need shoot()");

    const double s_reentry = std::isfinite(cfg.switch_radius) && sys.compactifier.Phi
                                 ? sys.compactifier.Phi(0.5 * cfg.switch_radius)
                                 : kInf;

    ChartLoopResult res;
    double t = start.t;
    double t_last = start.t;  // last recorded sample time (strictly increasing)
    Chart chart = start.chart;
    Vec z = start.state;
    Vec psi = start.psi;
    double gexp = 0.0;  // co-integrated growth exponent (|y|G_r - G)/|y|
    int oscillations = 0;
    long steps_used = 0;

    if (chart == Chart::Compact) {
        res.have_anchor = true;
        res.anchor_t = t;
        res.anchor_x = z;
        res.anchor_psi = psi;
    }

    // Control for the current segment / stage.
    Vec u_held;  // last non-degenerate feedback control
    if (cfg.feedback)
        u_held = Vec(static_cast<size_t>(std::max(sys.controls.dim_u, 1)), 0.0);

    auto current_u = [&](double tt, const Vec& psi_now) -> Vec {
        if (cfg.law) return cfg.law->value_at(tt);
        return cfg.feedback(tt, psi_now);
    };

    auto record_sample = [&](double tt, const Vec& zz, Chart ch, const Vec& ps, double g) {
        t_last = std::max(t_last, tt);
        if (!record) return;
        Trajectory::Sample s;
        s.t = tt;
        s.state = Vec(zz.begin(), zz.begin() + static_cast<long>(n));
        s.chart = ch;
        s.u = current_u(tt, ps);
        s.g_exp = g;
        res.traj.samples.push_back(std::move(s));
        if (coupled) res.costate.push_back({tt, ps});
    };

    {
        Vec psi0 = psi;
        record_sample(t, z, chart, psi0, gexp);
    }

    // A compact start (or conversion) already inside the blowup threshold is
    // the blowup event itself.
    auto at_threshold = [&]() {
        return chart == Chart::Compact && norm(z) <= cfg.eps_blow;
    };
    if (at_threshold()) {
        res.blew_up = true;
        res.T_hat = t;
        return res;
    }

    StepperOptions sopts;
    sopts.rel_tol = cfg.rel_tol;
    sopts.abs_tol = cfg.abs_tol;

    // Last accepted step state, for the stall-switch fallback.
    double t_acc = t;
    Vec z_acc = z;
    Vec psi_acc = psi;
    double g_acc = gexp;

    while (t < cfg.t_max) {
        const double t_stop =
            cfg.law ? std::min(cfg.t_max, cfg.law->next_breakpoint_after(t)) : cfg.t_max;
        const Vec u_seg = cfg.law ? cfg.law->value_at(t) : Vec();

        // Stacked field for this chart/segment: [z; psi?; gexp].
        const Chart ch = chart;
        auto field = [&, ch](double tt, const Vec& zz, Vec& dzz) {
            Vec zc(zz.begin(), zz.begin() + static_cast<long>(n));
            Vec u;
            if (cfg.law) {
                u = u_seg;
            } else {
                Vec ps(zz.begin() + static_cast<long>(n), zz.begin() + static_cast<long>(2 * n));
                u = cfg.feedback(tt, ps);
            }
            Vec dz = (ch == Chart::Outer) ? outer_field(sys, tt, zc, u)
                                          : compact_field(sys, tt, zc, u);
            dzz.resize(zz.size());
            std::copy(dz.begin(), dz.end(), dzz.begin());
            if (coupled) {
                Vec ps(zz.begin() + static_cast<long>(n), zz.begin() + static_cast<long>(2 * n));
                Vec dps(n);
                adjoint_accumulate(sys, tt, ch, zc, ps, dps);
                std::copy(dps.begin(), dps.end(), dzz.begin() + static_cast<long>(n));
            }
            const double rad = block_norm(zc, n);
            double iota = 0.0;
            if (ch == Chart::Outer) {
                if (rad > 0.0)
                    iota = sys.growth.G_r(tt, rad) - sys.growth.G(tt, rad) / rad;
            } else {
                iota = sys.growth_r_at_phi(tt, rad) - sys.growth_over_r_at_phi(tt, rad);
            }
            dzz.back() = iota;
        };

        Vec zfull = z;
        if (coupled) zfull.insert(zfull.end(), psi.begin(), psi.end());
        zfull.push_back(gexp);

        // Event bookkeeping captured from the step callback.
        struct EventStep {
            bool hit = false;
            double t0, t1;
            Vec y0, f0, y1, f1;
            int kind = 0;  // 1 switch out->compact, 2 blowup, 3 re-entry
        } ev;

        sopts.max_steps = cfg.max_steps - steps_used;
        if (sopts.max_steps <= 0) throw StepFailure("max_steps budget exhausted");

        auto on_step = [&](double t0, const Vec& y0, const Vec& f0, double t1, const Vec& y1,
                           const Vec& f1) -> StepOutcome {
            t_acc = t1;
            z_acc = Vec(y1.begin(), y1.begin() + static_cast<long>(n));
            if (coupled)
                psi_acc = Vec(y1.begin() + static_cast<long>(n),
                              y1.begin() + static_cast<long>(2 * n));
            g_acc = y1.back();
            const double rad1 = block_norm(y1, n);
            int kind = 0;
            if (ch == Chart::Outer) {
                if (rad1 >= cfg.switch_radius) kind = 1;
            } else {
                if (rad1 <= cfg.eps_blow)
                    kind = 2;
                else if (rad1 >= s_reentry)
                    kind = 3;
            }
            if (kind != 0) {
                ev = {true, t0, t1, y0, f0, y1, f1, kind};
                return StepOutcome::Stop;
            }
            if (record) {
                Vec ps;
                if (coupled)
                    ps = Vec(y1.begin() + static_cast<long>(n),
                             y1.begin() + static_cast<long>(2 * n));
                record_sample(t1, y1, ch, ps, y1.back());
            }
            return StepOutcome::Continue;
        };

        DriveResult dr;
        try {
            dr = drive(field, t, zfull, t_stop, sopts, on_step);
        } catch (const StepFailure&) {
            if (ch == Chart::Compact) {
                // The remaining tail time is below floating-point resolution
                // before |x| reached eps_blow: the threshold is too deep for
                // this compactifier in double precision.
                const Vec u_acc = cfg.law ? u_seg : cfg.feedback(t_acc, psi_acc);
                const Vec f_acc = compact_field(sys, t_acc, z_acc, u_acc);
                if (dot(f_acc, z_acc) < 0.0)
                    throw StepFailure(
                        "blowup tail below the floating-point time resolution at t=" +
                        std::to_string(t_acc) + "; increase eps_blow");
                throw;
            }
            // An escaping trajectory can outrun the floating-point time
            // resolution of the outer chart before |y| reaches switch_radius
            // (steep growths). If the last accepted state is inside the
            // chart domain and still expanding, change charts there.
            if (!sys.compactifier.Phi) throw;
            const double r_acc = norm(z_acc);
            if (!(r_acc > sys.compactifier.phi(sys.compactifier.s0) * (1.0 + 1e-6))) throw;
            const Vec u_acc = cfg.law ? u_seg : cfg.feedback(t_acc, psi_acc);
            const Vec f_acc = outer_field(sys, t_acc, z_acc, u_acc);
            if (!(dot(f_acc, z_acc) > 0.0)) throw;
            const double s = sys.compactifier.Phi(r_acc);
            t = std::max(t_acc, t_last + 1e-15 * std::max(1.0, std::abs(t_last)));
            z = scaled(z_acc, s / r_acc);
            psi = psi_acc;
            chart = Chart::Compact;
            res.n_switches += 1;
            res.have_anchor = true;
            res.anchor_t = t;
            res.anchor_x = z;
            res.anchor_psi = psi;
            gexp = g_acc;
            record_sample(t, z, chart, psi, gexp);
            if (at_threshold()) {
                res.blew_up = true;
                res.T_hat = t;
                break;
            }
            continue;
        }
        steps_used += dr.n_steps;
        res.n_steps = steps_used;

        if (!ev.hit) {
            t = dr.t_end;
            z = Vec(dr.y_end.begin(), dr.y_end.begin() + static_cast<long>(n));
            if (coupled)
                psi = Vec(dr.y_end.begin() + static_cast<long>(n),
                          dr.y_end.begin() + static_cast<long>(2 * n));
            gexp = dr.y_end.back();
            continue;
        }

        // Localize the crossing inside the accepted step by bisection on the
        // Hermite interpolant of the chart-state radius.
        const double threshold = (ev.kind == 1)   ? cfg.switch_radius
                                 : (ev.kind == 2) ? cfg.eps_blow
                                                  : s_reentry;
        const double sign = (ev.kind == 2) ? -1.0 : 1.0;  // crossing direction
        auto event_fn = [&](double tt) {
            const Vec zi = hermite(tt, ev.t0, ev.y0, ev.f0, ev.t1, ev.y1, ev.f1);
            return sign * (block_norm(zi, n) - threshold);
        };
        double lo = ev.t0, hi = ev.t1;
        if (event_fn(lo) >= 0.0) {
            hi = lo;  // crossing at (or numerically before) the step start
        } else {
            for (int it = 0; it < 128; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                (event_fn(mid) >= 0.0 ? hi : lo) = mid;
            }
        }
        double t_c = hi;
        if (t_c <= t_last)  // keep sample times strictly increasing
            t_c = std::min(ev.t1, t_last + 1e-15 * std::max(1.0, std::abs(t_last)));
        Vec z_c_full = (t_c == ev.t1)
                           ? ev.y1
                           : hermite(t_c, ev.t0, ev.y0, ev.f0, ev.t1, ev.y1, ev.f1);
        Vec z_c(z_c_full.begin(), z_c_full.begin() + static_cast<long>(n));
        Vec psi_c;
        if (coupled)
            psi_c = Vec(z_c_full.begin() + static_cast<long>(n),
                        z_c_full.begin() + static_cast<long>(2 * n));
        const double g_c = z_c_full.back();

        if (ev.kind == 2) {
            // Blowup: clamp to the threshold radius and stop.
            res.blew_up = true;
            res.T_hat = t_c;
            record_sample(t_c, z_c, Chart::Compact, psi_c, g_c);
            t = t_c;
            z = z_c;
            psi = psi_c;
            break;
        }

        if (ev.kind == 1) {
            const double r = block_norm(z_c, n);
            const double s = sys.compactifier.Phi(r);
            Vec x = scaled(z_c, s / r);
            chart = Chart::Compact;
            z = x;
            res.n_switches += 1;
            res.have_anchor = true;
            res.anchor_t = t_c;
            res.anchor_x = x;
            res.anchor_psi = psi_c;
            if (norm(z) <= cfg.eps_blow) {
                // The conversion landed at/below the threshold: blowup now.
                res.blew_up = true;
                res.T_hat = t_c;
                psi = psi_c;
                t = t_c;
                gexp = g_c;
                record_sample(t, z, chart, psi, gexp);
                break;
            }
        } else {
            const double s = block_norm(z_c, n);
            const double r = sys.compactifier.phi(s);
            Vec y = scaled(z_c, r / s);
            chart = Chart::Outer;
            z = y;
            res.n_switches += 1;
            oscillations += 1;
            if (oscillations > 10)
                throw ChartFailure("more than 10 chart oscillations at t=" +
                                   std::to_string(t_c));
        }
        psi = psi_c;
        t = t_c;
        gexp = g_c;
        record_sample(t, z, chart, psi, gexp);
    }

    return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public integration entry points

IntegrateOptions resolve_defaults(const ControlSystem& sys, IntegrateOptions opts) {
    const bool has_chart = static_cast<bool>(sys.compactifier.phi);
    if (!has_chart) {
        opts.switch_radius = kInf;
        return opts;
    }
    const double s0 = sys.compactifier.s0;
    if (opts.eps_blow <= 0.0) opts.eps_blow = 1e-6 * s0;
    if (!(opts.eps_blow > 0.0 && opts.eps_blow < s0 / 10.0))
        throw ConfigError("eps_blow must lie in (0, s0/10)");
    if (opts.switch_radius <= 0.0) {
        opts.switch_radius = opts.rho_hint > 0.0
                                 ? std::max(2.0 * opts.rho_hint, 10.0 * norm(sys.y0))
                                 : 1e3;
        // Steep compactifiers (phi(s0) large) may put the generic default
        // below the chart domain; enter mid-chart instead.
        const double s_def = sys.compactifier.Phi(opts.switch_radius);
        if (!(s_def > 0.0 && s_def < s0))
            opts.switch_radius =
                std::max(opts.switch_radius, sys.compactifier.phi(0.5 * s0));
    }
    if (opts.rho_hint > 0.0 && opts.switch_radius <= opts.rho_hint)
        throw ConfigError("switch_radius must exceed the active bundle rho");
    const double s_switch = sys.compactifier.Phi(opts.switch_radius);
    if (!(s_switch > 0.0 && s_switch < s0))
        throw ConfigError("switch_radius outside the compactifier chart domain");
    return opts;
}

namespace {

detail::ChartLoopConfig loop_config(const ControlSystem& sys, const ControlLaw& law,
                                    const IntegrateOptions& opts) {
    detail::ChartLoopConfig cfg;
    cfg.sys = &sys;
    cfg.law = &law;
    cfg.rel_tol = opts.rel_tol;
    cfg.abs_tol = opts.abs_tol;
    cfg.switch_radius = opts.switch_radius;
    cfg.eps_blow = opts.eps_blow;
    cfg.t_max = opts.t_max;
    cfg.max_steps = opts.max_steps;
    return cfg;
}

detail::ChartLoopStart loop_start(const ControlSystem& sys, const IntegrateOptions& opts) {
    detail::ChartLoopStart st;
    st.t = 0.0;
    const double r0 = norm(sys.y0);
    if (std::isfinite(opts.switch_radius) && r0 >= opts.switch_radius) {
        st.chart = Chart::Compact;
        st.state = compact_state(sys, sys.y0);
    } else {
        st.chart = Chart::Outer;
        st.state = sys.y0;
    }
    return st;
}

// Rerun the compact tail from the anchor with a smaller eps_blow. Returns
// nothing when the smaller threshold is unreachable within the floating-point
// time resolution (step underflow at the singularity).
std::optional<double> tail_time(const detail::ChartLoopConfig& base,
                                const detail::ChartLoopResult& main, double eps) {
    detail::ChartLoopConfig cfg = base;
    cfg.eps_blow = eps;
    detail::ChartLoopStart st;
    st.t = main.anchor_t;
    st.chart = Chart::Compact;
    st.state = main.anchor_x;
    st.psi = main.anchor_psi;
    try {
        detail::ChartLoopResult r = detail::run_chart_loop(cfg, st, false);
        if (!r.blew_up) throw NoBlowupError("refinement rerun reached t_max");
        return r.T_hat;
    } catch (const StepFailure&) {
        return std::nullopt;
    }
}

double err_floor(double T) {
    return 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(T));
}

}  // namespace

Trajectory integrate(const ControlSystem& sys, const ControlLaw& law,
                     const IntegrateOptions& opts_in) {
    const IntegrateOptions opts = resolve_defaults(sys, opts_in);
    detail::ChartLoopConfig cfg = loop_config(sys, law, opts);
    detail::ChartLoopResult res = detail::run_chart_loop(cfg, loop_start(sys, opts), true);

    Trajectory traj = std::move(res.traj);
    traj.switch_radius = opts.switch_radius;
    traj.eps_blow = opts.eps_blow;
    traj.n_steps = res.n_steps;
    traj.n_switches = res.n_switches;
    if (res.blew_up) {
        const double T1 = res.T_hat;
        const std::optional<double> T2 = tail_time(cfg, res, 0.5 * opts.eps_blow);
        const double err =
            T2 ? std::max(2.0 * std::abs(*T2 - T1), err_floor(T1)) : err_floor(T1);
        traj.blowup = BlowupEstimate{T1, err};
    }
    return traj;
}

std::pair<double, double> blowup_time(const ControlSystem& sys, const ControlLaw& law,
                                      const IntegrateOptions& opts_in) {
    const IntegrateOptions opts = resolve_defaults(sys, opts_in);
    detail::ChartLoopConfig cfg = loop_config(sys, law, opts);
    detail::ChartLoopResult res = detail::run_chart_loop(cfg, loop_start(sys, opts), false);
    if (!res.blew_up) throw NoBlowupError("no blowup before t_max");

    // Richardson ladder on the threshold; levels below the floating-point
    // time resolution degrade to the deepest reachable estimate.
    const double T1 = res.T_hat;
    const std::optional<double> T2 = tail_time(cfg, res, 0.25 * opts.eps_blow);
    if (!T2) return {T1, err_floor(T1)};
    const std::optional<double> T3 = tail_time(cfg, res, 0.0625 * opts.eps_blow);
    if (!T3) return {*T2, std::max(2.0 * std::abs(*T2 - T1), err_floor(*T2))};
    const double d1 = *T2 - T1, d2 = *T3 - *T2;
    double T = *T3;
    if (d2 != 0.0 && d1 / d2 > 1.01) {
        const double ratio = d1 / d2;  // = 4^q for tail error C eps^q
        T = *T3 + d2 / (ratio - 1.0);
    }
    return {T, std::max(2.0 * std::abs(d2), err_floor(T))};
}

// ---------------------------------------------------------------------------
// Chattering

ChatterResult chatter_convergence(const ControlSystem& sys, const Vec& u_a, const Vec& u_b,
                                  double lambda, const std::vector<double>& periods,
                                  const IntegrateOptions& opts) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw PreconditionError("chatter weight must lie in [0,1]");

    // Both constant controls must blow up (precondition; errors propagate).
    (void)blowup_time(sys, ControlLaw::constant(u_a), opts);
    (void)blowup_time(sys, ControlLaw::constant(u_b), opts);

    ChatterResult out;
    for (double h : periods) {
        if (!(h > 0.0)) throw PreconditionError("chatter period must be positive");
        // Symmetric pattern per period: u_a for lambda*h/2, u_b for (1-lambda)*h,
        // u_a for lambda*h/2. Segments of equal consecutive value are merged.
        std::vector<double> bp;
        std::vector<Vec> vals;
        auto push = [&](double t, const Vec& v) {
            if (!vals.empty() && vals.back() == v) return;
            bp.push_back(t);
            vals.push_back(v);
        };
        double t = 0.0;
        while (t < opts.t_max + h) {
            if (lambda > 0.0) push(t, u_a);
            if (lambda < 1.0) push(t + 0.5 * lambda * h, u_b);
            if (lambda > 0.0) push(t + 0.5 * lambda * h + (1.0 - lambda) * h, u_a);
            t += h;
        }
        const ControlLaw law = ControlLaw::piecewise(std::move(bp), std::move(vals));
        out.by_period.emplace_back(h, blowup_time(sys, law, opts).first);
    }

    // Averaged constant drift: b_avg(t) = lambda b(t,u_a) + (1-lambda) b(t,u_b).
    ControlSystem avg = sys;
    {
        auto b0 = sys.controls.b;
        Vec ua = u_a, ub = u_b;
        ControlGeometry geo;
        geo.kind = ControlKind::FiniteSet;
        geo.dim_u = sys.controls.dim_u;
        geo.values = {Vec(static_cast<size_t>(std::max(geo.dim_u, 1)), 0.0)};
        geo.b = [b0, ua, ub, lambda](double tt, const Vec&) {
            Vec v = b0(tt, ua);
            const Vec w = b0(tt, ub);
            for (size_t i = 0; i < v.size(); ++i)
                v[i] = lambda * v[i] + (1.0 - lambda) * w[i];
            return v;
        };
        geo.bound = sys.controls.bound;
        avg.controls = std::move(geo);
    }
    out.T_avg = blowup_time(avg, ControlLaw::constant(avg.controls.values.front()), opts).first;
    return out;
}

// ---------------------------------------------------------------------------
// Dense output

TrajectoryView::TrajectoryView(const ControlSystem& sys, const Trajectory& traj)
    : sys_(&sys), traj_(&traj) {
    if (traj.samples.size() < 2)
        throw PreconditionError("trajectory too short for interpolation");
}

double TrajectoryView::t_front() const { return traj_->samples.front().t; }
double TrajectoryView::t_back() const { return traj_->samples.back().t; }

size_t TrajectoryView::interval_index(double t) const {
    const auto& ss = traj_->samples;
    const double slack = 1e-12 * std::max(1.0, std::abs(ss.back().t));
    if (t < ss.front().t - slack || t > ss.back().t + slack)
        throw PreconditionError("query beyond trajectory range: t=" + std::to_string(t));
    size_t lo = 0, hi = ss.size() - 1;
    while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        (ss[mid].t <= t ? lo : hi) = mid;
    }
    return lo;
}

namespace {

Vec convert_chart(const ControlSystem& sys, const Vec& state, Chart from, Chart to) {
    if (from == to) return state;
    const double m = norm(state);
    if (to == Chart::Outer) {
        const double r = sys.compactifier.phi(m);
        return scaled(state, r / m);
    }
    const double s = sys.compactifier.Phi(m);
    return scaled(state, s / m);
}

}  // namespace

RadialPoint TrajectoryView::radial(double t) const {
    const size_t k = interval_index(t);
    const auto& a = traj_->samples[k];
    const auto& b = traj_->samples[k + 1];
    const Chart C = a.chart;
    const Vec z0 = a.state;
    const Vec z1 = convert_chart(*sys_, b.state, b.chart, C);
    const Vec f0 = (C == Chart::Outer) ? outer_field(*sys_, a.t, z0, a.u)
                                       : compact_field(*sys_, a.t, z0, a.u);
    const Vec f1 = (C == Chart::Outer) ? outer_field(*sys_, b.t, z1, a.u)
                                       : compact_field(*sys_, b.t, z1, a.u);
    Vec z = hermite(std::clamp(t, a.t, b.t), a.t, z0, f0, b.t, z1, f1);
    RadialPoint rp;
    rp.chart = C;
    rp.rad = norm(z);
    rp.theta = scaled(z, 1.0 / rp.rad);
    return rp;
}

Vec TrajectoryView::y(double t) const {
    const RadialPoint rp = radial(t);
    if (rp.chart == Chart::Outer) return scaled(rp.theta, rp.rad);
    return scaled(rp.theta, sys_->compactifier.phi(rp.rad));
}

double TrajectoryView::radius(double t) const {
    const RadialPoint rp = radial(t);
    return rp.chart == Chart::Outer ? rp.rad : sys_->compactifier.phi(rp.rad);
}

const Vec& TrajectoryView::control(double t) const {
    return traj_->samples[interval_index(t)].u;
}

// ---------------------------------------------------------------------------
// Export / import

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    if (traj.samples.empty()) return;
    const size_t n = traj.samples.front().state.size();
    const size_t m = traj.samples.front().u.size();
    out << "t,chart";
    for (size_t i = 1; i <= n; ++i) out << ",c" << i;
    for (size_t i = 1; i <= m; ++i) out << ",u" << i;
    out << "\n";
    out.precision(17);
    for (const auto& s : traj.samples) {
        out << s.t << ',' << (s.chart == Chart::Outer ? "outer" : "compact");
        for (double v : s.state) out << ',' << v;
        for (double v : s.u) out << ',' << v;
        out << "\n";
    }
}

Trajectory read_trajectory_csv(std::istream& in, const ControlSystem& sys) {
    Trajectory traj;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("trajectory csv: missing header");
    size_t n = 0, m = 0;
    {
        std::stringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ',')) {
            if (col.size() > 1 && col[0] == 'c' && std::isdigit(col[1])) ++n;
            if (col.size() > 1 && col[0] == 'u' && std::isdigit(col[1])) ++m;
        }
    }
    if (static_cast<int>(n) != sys.n)
        throw ConfigError("trajectory csv: state dimension does not match the system");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        Trajectory::Sample s;
        std::getline(ls, cell, ',');
        s.t = std::stod(cell);
        std::getline(ls, cell, ',');
        if (cell == "outer")
            s.chart = Chart::Outer;
        else if (cell == "compact")
            s.chart = Chart::Compact;
        else
            throw ConfigError("trajectory csv: bad chart tag '" + cell + "'");
        for (size_t i = 0; i < n; ++i) {
            std::getline(ls, cell, ',');
            s.state.push_back(std::stod(cell));
        }
        for (size_t i = 0; i < m; ++i) {
            std::getline(ls, cell, ',');
            s.u.push_back(std::stod(cell));
        }
        if (!traj.samples.empty() && !(s.t > traj.samples.back().t))
            throw ConfigError("trajectory csv: times must be strictly increasing");
        traj.samples.push_back(std::move(s));
    }
    return traj;
}

nlohmann::json trajectory_summary(const Trajectory& traj) {
    nlohmann::json j;
    if (traj.blowup) {
        j["T_hat"] = traj.blowup->T_hat;
        j["err"] = traj.blowup->err;
    } else {
        j["T_hat"] = nullptr;
        j["err"] = nullptr;
    }
    j["n_steps"] = traj.n_steps;
    j["switches"] = traj.n_switches;
    return j;
}

}  // namespace blowup
