#include "blowup/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "blowup/growth.hpp"
#include "blowup/rk.hpp"
#include "chart_loop.hpp"

namespace blowup {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Adjoint matrices

Mat adjoint_matrix(const ControlSystem& sys, double t, const Vec& y, AdjointMode mode,
                   const Vec* u, bool* origin_fallback) {
    const int n = sys.n;
    if (origin_fallback) *origin_fallback = false;

    if (mode == AdjointMode::AutonomousFull) {
        Mat J(n, n);
        if (sys.f_jacobian) {
            const Vec uu = u ? *u : Vec(static_cast<size_t>(std::max(sys.controls.dim_u, 1)), 0.0);
            J = sys.f_jacobian(y, uu);
        } else {
            // Jacobian of the autonomous field at t = 0 via the radial/angular
            // split: G_r theta theta^T + (G/r)(I - theta theta^T) + A.
            const double r = norm(y);
            if (r <= 0.0) throw PreconditionError("AutonomousFull Jacobian needs |y| > 0");
            const double Gr = sys.growth.G_r(0.0, r);
            const double a = sys.growth.G(0.0, r) / r;
            const Mat A = sys.drift.A(0.0);
            Vec theta = scaled(y, 1.0 / r);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double tt = theta[static_cast<size_t>(i)] * theta[static_cast<size_t>(j)];
                    J(i, j) = Gr * tt + a * ((i == j ? 1.0 : 0.0) - tt) + A(i, j);
                }
        }
        return transpose(J);
    }

    // Structured: (G/r) I + ((r G_r - G)/r^3) y y^T + A^T, literally.
    Mat M = transpose(sys.drift.A(t));
    const double r = norm(y);
    if (r <= 0.0) {
        if (origin_fallback) *origin_fallback = true;
        const double g0 = sys.growth.G_r(t, 0.0);
        for (int i = 0; i < n; ++i) M(i, i) += g0;
        return M;
    }
    const double G = sys.growth.G(t, r);
    const double c = (r * sys.growth.G_r(t, r) - G) / (r * r * r);
    const double a = G / r;
    for (int i = 0; i < n; ++i) {
        M(i, i) += a;
        for (int j = 0; j < n; ++j)
            M(i, j) += c * y[static_cast<size_t>(i)] * y[static_cast<size_t>(j)];
    }
    return M;
}

Vec adjoint_rhs(const ControlSystem& sys, double t, const Vec& y, const Vec& psi,
                bool* origin_fallback) {
    const Mat M = adjoint_matrix(sys, t, y, AdjointMode::Structured, nullptr, origin_fallback);
    return scaled(mul(M, psi), -1.0);
}

// ---------------------------------------------------------------------------
// Adjoint integration along a trajectory

CostatePath integrate_adjoint(const Trajectory& traj, const ControlSystem& sys, double t_ref,
                              const Vec& psi_ref, Direction dir, const AdjointOptions& opts) {
    TrajectoryView view(sys, traj);
    const double lo = view.t_front(), hi = view.t_back();
    if (t_ref < lo - 1e-12 || t_ref > hi + 1e-12)
        throw PreconditionError("t_ref outside the trajectory range");
    double t_end = opts.t_end;
    if (std::isnan(t_end)) t_end = (dir == Direction::Forward) ? hi : lo;
    if (dir == Direction::Forward ? t_end < t_ref : t_end > t_ref)
        throw PreconditionError("t_end on the wrong side of t_ref");

    Field field = [&](double t, const Vec& psi, Vec& dpsi) {
        const RadialPoint rp = view.radial(std::clamp(t, lo, hi));
        dpsi.resize(psi.size());
        detail::adjoint_accumulate(sys, t, rp.chart, scaled(rp.theta, rp.rad), psi, dpsi);
    };

    StepperOptions sopts;
    sopts.rel_tol = opts.rel_tol;
    sopts.abs_tol = opts.abs_tol;

    CostatePath path;
    path.t_ref = t_ref;
    path.normalization = norm(psi_ref);
    path.samples.push_back({t_ref, psi_ref});
    drive(field, t_ref, psi_ref, t_end, sopts,
          [&](double, const Vec&, const Vec&, double t1, const Vec& y1, const Vec&) {
              path.samples.push_back({t1, y1});
              return StepOutcome::Continue;
          });
    if (dir == Direction::Backward) std::reverse(path.samples.begin(), path.samples.end());
    return path;
}

CostateView::CostateView(const ControlSystem& sys, const Trajectory& traj,
                         const CostatePath& path)
    : sys_(&sys), view_(sys, traj), path_(&path) {
    if (path.samples.size() < 2)
        throw PreconditionError("costate path too short for interpolation");
}

Vec CostateView::psi(double t) const {
    const auto& ss = path_->samples;
    const double slack = 1e-12 * std::max(1.0, std::abs(ss.back().t));
    if (t < ss.front().t - slack || t > ss.back().t + slack)
        throw PreconditionError("costate query beyond the stored range");
    size_t lo = 0, hi = ss.size() - 1;
    while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        (ss[mid].t <= t ? lo : hi) = mid;
    }
    const auto& a = ss[lo];
    const auto& b = ss[lo + 1];
    auto slope = [&](double tt, const Vec& p) {
        Vec d(p.size());
        const RadialPoint rp = view_.radial(std::clamp(tt, view_.t_front(), view_.t_back()));
        detail::adjoint_accumulate(*sys_, tt, rp.chart, scaled(rp.theta, rp.rad), p, d);
        return d;
    };
    return hermite(std::clamp(t, a.t, b.t), a.t, a.psi, slope(a.t, a.psi), b.t, b.psi,
                   slope(b.t, b.psi));
}

// ---------------------------------------------------------------------------
// Hamiltonian maximization

HamiltonianControl hamiltonian_control(const ControlSystem& sys, double t, const Vec& psi) {
    HamiltonianControl out;
    const ControlGeometry& geo = sys.controls;
    switch (geo.kind) {
        case ControlKind::LinearBall: {
            const Mat B = geo.B(t);
            const Vec w = mul_t(B, psi);
            const double wn = norm(w);
            // Degeneracy is relative to the costate scale: psi orthogonal to
            // the range of B, not merely small.
            if (wn <= 1e-14 * norm(psi) * op_norm(B)) {
                out.u = Vec(static_cast<size_t>(geo.dim_u), 0.0);
                out.value = 0.0;
                out.degenerate = true;
                return out;
            }
            out.u = scaled(w, geo.radius / wn);
            out.value = geo.radius * wn;
            return out;
        }
        case ControlKind::FiniteSet: {
            double best = -kInf;
            size_t best_i = 0;
            for (size_t i = 0; i < geo.values.size(); ++i) {
                const double v = dot(psi, geo.b(t, geo.values[i]));
                if (v > best) {
                    best = v;
                    best_i = i;
                }
            }
            out.u = geo.values[best_i];
            out.value = best;
            out.degenerate = (norm(psi) == 0.0);
            return out;
        }
        case ControlKind::CustomConvex: {
            if (!geo.support)
                throw PreconditionError("custom geometry lacks a support maximizer");
            const SupportPoint sp = geo.support(t, psi);
            out.u = sp.u;
            out.value = sp.value;
            out.degenerate = sp.degenerate || norm(psi) == 0.0;
            return out;
        }
    }
    throw PreconditionError("unknown control geometry");
}

// ---------------------------------------------------------------------------
// Shooting

ShootResult shoot(const ControlSystem& sys, const Vec& psi0, const IntegrateOptions& opts_in,
                  Mode mode) {
    if (static_cast<int>(psi0.size()) != sys.n)
        throw PreconditionError("psi0 dimension mismatch");
    if (std::abs(norm(psi0) - 1.0) > 1e-9)
        throw PreconditionError("shoot requires |psi0| = 1");

    const IntegrateOptions opts = resolve_defaults(sys, opts_in);

    // Hamiltonian feedback; degenerate stretches hold the last maximizer.
    auto held = std::make_shared<Vec>(Vec(static_cast<size_t>(std::max(sys.controls.dim_u, 1)), 0.0));
    auto feedback = [&sys, held](double t, const Vec& psi) {
        const HamiltonianControl hc = hamiltonian_control(sys, t, psi);
        if (hc.degenerate) return *held;
        *held = hc.u;
        return hc.u;
    };

    detail::ChartLoopConfig cfg;
    cfg.sys = &sys;
    cfg.feedback = feedback;
    cfg.with_costate = true;
    cfg.rel_tol = opts.rel_tol;
    cfg.abs_tol = opts.abs_tol;
    cfg.switch_radius = opts.switch_radius;
    cfg.eps_blow = opts.eps_blow;
    cfg.t_max = opts.t_max;
    cfg.max_steps = opts.max_steps;

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
    st.psi = psi0;

    detail::ChartLoopResult res = detail::run_chart_loop(cfg, st, true);

    ShootResult out;
    out.mode = mode;
    out.traj = std::move(res.traj);
    out.traj.switch_radius = opts.switch_radius;
    out.traj.eps_blow = opts.eps_blow;
    out.traj.n_steps = res.n_steps;
    out.traj.n_switches = res.n_switches;
    if (res.blew_up) {
        const double floor =
            8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, res.T_hat);
        double err = floor;
        try {
            detail::ChartLoopConfig cfg2 = cfg;
            cfg2.eps_blow = 0.5 * opts.eps_blow;
            detail::ChartLoopStart st2;
            st2.t = res.anchor_t;
            st2.chart = Chart::Compact;
            st2.state = res.anchor_x;
            st2.psi = res.anchor_psi;
            const detail::ChartLoopResult r2 = detail::run_chart_loop(cfg2, st2, false);
            if (r2.blew_up)
                err = std::max(2.0 * std::abs(r2.T_hat - res.T_hat), floor);
        } catch (const StepFailure&) {
            // threshold halving below the time resolution: keep the floor
        }
        out.traj.blowup = BlowupEstimate{res.T_hat, err};
    }
    out.costate.samples = std::move(res.costate);
    out.costate.t_ref = 0.0;
    out.costate.normalization = 1.0;

    // Degenerate stretches, from the recorded samples.
    bool open = false;
    double w0 = 0.0;
    for (const auto& cs : out.costate.samples) {
        const bool deg = hamiltonian_control(sys, cs.t, cs.psi).degenerate;
        if (deg && !open) {
            open = true;
            w0 = cs.t;
        } else if (!deg && open) {
            open = false;
            out.degenerate_windows.emplace_back(w0, cs.t);
        }
    }
    if (open) out.degenerate_windows.emplace_back(w0, out.costate.samples.back().t);
    return out;
}

// ---------------------------------------------------------------------------
// Certification

PMPReport certify(const Trajectory& traj, const CostatePath& costate,
                  const ControlSystem& sys, Mode mode, const CertifyOptions& opts) {
    if (costate.samples.size() < 2 || traj.samples.size() < 2)
        throw PreconditionError("certify needs a trajectory/costate pair");

    PMPReport rep;
    rep.mode = mode;

    // Rescale to |psi| = 1 at the first costate sample (the proof's |phi_T(0)|=1).
    const double nu = norm(costate.samples.front().psi);
    if (!(nu > 0.0)) throw PreconditionError("costate starts at zero");
    const double scale = 1.0 / nu;

    TrajectoryView view(sys, traj);
    const GrowthExponent ge = growth_exponent_integral(traj, sys);

    const double t_lo = std::max(view.t_front(), costate.t_front());
    double t_hi = std::min(view.t_back(), costate.t_back());
    double t10 = t_hi;
    if (traj.blowup) {
        t10 = traj.blowup->T_hat * (1.0 - std::pow(2.0, -opts.tail_k));
        t_hi = std::min(t_hi, t10);
    }

    double sup_psi = 0.0, h_gap = 0.0;
    struct Entry {
        double t, inner, weighted;
        bool degenerate;
        bool sign_ok;
    };
    std::vector<Entry> entries;
    for (const auto& cs : costate.samples) {
        if (cs.t < t_lo - 1e-14 || cs.t > t_hi * (1.0 + 1e-14)) continue;
        const double t = std::min(cs.t, view.t_back());
        const Vec psi = scaled(cs.psi, scale);
        sup_psi = std::max(sup_psi, norm(psi));

        const RadialPoint rp = view.radial(t);
        const double r =
            rp.chart == Chart::Outer ? rp.rad : sys.compactifier.phi(rp.rad);
        const double inner = r * dot(psi, rp.theta);

        const HamiltonianControl hc = hamiltonian_control(sys, t, psi);
        double gap_t = 0.0;
        if (!hc.degenerate) {
            const double applied = dot(psi, sys.controls.b(t, view.control(t)));
            gap_t = hc.value - applied;
            h_gap = std::max(h_gap, gap_t);
        }

        Entry e;
        e.t = t;
        e.inner = inner;
        e.weighted = std::exp(ge(t)) * inner;
        e.degenerate = hc.degenerate;
        e.sign_ok = (mode == Mode::TI) ? (inner > 0.0) : (inner < 0.0);
        entries.push_back(e);

        rep.sign_inner.emplace_back(t, inner);
        rep.weighted_inner.emplace_back(t, e.weighted);
    }
    if (entries.empty()) throw PreconditionError("no certifiable samples in range");

    rep.hamiltonian_gap = h_gap;
    const double sup_b = sys.controls.bound ? sys.controls.bound(t_lo, t_hi) : 0.0;
    const double gap_tol =
        opts.gap_tol > 0.0 ? opts.gap_tol : 1e-8 * std::max(sup_psi * sup_b, 1e-300);
    rep.verdicts.h_max = h_gap <= gap_tol;

    // Transversality tail |psi(t_k)|, t_k = T_hat (1 - 2^-k).
    rep.tail_applicable = false;
    if (traj.blowup && costate.t_back() >= t10 * (1.0 - 1e-12)) {
        const CostateView cview(sys, traj, costate);
        bool decay = true;
        double first = 0.0, last = 0.0;
        for (int k = 1; k <= opts.tail_k; ++k) {
            const double tk = traj.blowup->T_hat * (1.0 - std::pow(2.0, -k));
            const double pn = norm(cview.psi(std::min(tk, costate.t_back()))) * scale;
            rep.costate_tail.emplace_back(tk, pn);
            if (k == 1) first = pn;
            if (k > 1 && pn >= last) decay = false;
            last = pn;
        }
        rep.tail_applicable = true;
        rep.verdicts.tail_decay = decay;
        rep.verdicts.tail_small = last <= opts.tail_small_factor * first;
    }

    // Sign conditions and the largest trailing window on which they hold.
    bool sign_all = true;
    double window_start = entries.front().t;
    bool window_open = false;
    double inner_scale = 0.0;
    for (const auto& e : entries) inner_scale = std::max(inner_scale, std::abs(e.inner));
    for (const auto& e : entries) {
        if (!e.sign_ok) sign_all = false;
        if (e.sign_ok && !window_open) {
            window_open = true;
            window_start = e.t;
        } else if (!e.sign_ok) {
            window_open = false;
        }
    }
    rep.verdicts.sign = sign_all;
    rep.sign_window_start = window_open ? window_start : entries.back().t;
    if (mode == Mode::TS) {
        bool weak = true;
        for (const auto& e : entries)
            if (e.inner > 1e-12 * (1.0 + inner_scale)) weak = false;
        rep.verdicts.sign_weak = weak;
    }

    // Weighted monotonicity of e^{g(t)} <psi, y>.
    bool wmono = true;
    for (size_t i = 1; i < entries.size(); ++i) {
        const double inc = entries[i].weighted - entries[i - 1].weighted;
        if (inc < -opts.weighted_slack * (1.0 + std::abs(entries[i].weighted))) wmono = false;
    }
    rep.verdicts.weighted_monotone = wmono;

    // Degenerate windows from the sample flags.
    bool open = false;
    double w0 = 0.0;
    long ndeg = 0;
    for (const auto& e : entries) {
        if (e.degenerate) ++ndeg;
        if (e.degenerate && !open) {
            open = true;
            w0 = e.t;
        } else if (!e.degenerate && open) {
            open = false;
            rep.degenerate_windows.emplace_back(w0, e.t);
        }
    }
    if (open) rep.degenerate_windows.emplace_back(w0, entries.back().t);
    rep.n_samples = static_cast<long>(entries.size());
    rep.n_degenerate = ndeg;

    return rep;
}

nlohmann::json report_json(const PMPReport& rep) {
    nlohmann::json j;
    j["mode"] = rep.mode == Mode::TI ? "ti" : "ts";
    j["hamiltonian_gap"] = rep.hamiltonian_gap;
    j["tail"] = nlohmann::json::array();
    for (const auto& [t, pn] : rep.costate_tail)
        j["tail"].push_back({{"t", t}, {"psi_norm", pn}});
    j["sign_inner"] = nlohmann::json::array();
    for (const auto& [t, v] : rep.sign_inner)
        j["sign_inner"].push_back({{"t", t}, {"value", v}});
    j["weighted_monotone"] = rep.verdicts.weighted_monotone;
    j["verdicts"] = {{"H_max", rep.verdicts.h_max},
                     {"transversality", rep.verdicts.tail_decay && rep.verdicts.tail_small},
                     {"sign", rep.verdicts.sign}};
    j["sign_window_start"] = rep.sign_window_start;
    return j;
}

void write_costate_csv(std::ostream& out, const CostatePath& path) {
    if (path.samples.empty()) return;
    const size_t n = path.samples.front().psi.size();
    out << "t";
    for (size_t i = 1; i <= n; ++i) out << ",psi" << i;
    out << "\n";
    out.precision(17);
    for (const auto& s : path.samples) {
        out << s.t;
        for (double v : s.psi) out << ',' << v;
        out << "\n";
    }
}

CostatePath read_costate_csv(std::istream& in) {
    CostatePath path;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("costate csv: missing header");
    size_t n = 0;
    {
        std::stringstream hs(line);
        std::string col;
        while (std::getline(hs, col, ','))
            if (col.rfind("psi", 0) == 0) ++n;
    }
    if (n == 0) throw ConfigError("costate csv: no psi columns");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        CostatePath::Sample s;
        std::getline(ls, cell, ',');
        s.t = std::stod(cell);
        for (size_t i = 0; i < n; ++i) {
            std::getline(ls, cell, ',');
            s.psi.push_back(std::stod(cell));
        }
        path.samples.push_back(std::move(s));
    }
    if (path.samples.empty()) throw ConfigError("costate csv: no samples");
    path.t_ref = path.samples.front().t;
    path.normalization = norm(path.samples.front().psi);
    return path;
}

}  // namespace blowup
