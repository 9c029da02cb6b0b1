#include "blowup/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "blowup/growth.hpp"
#include "blowup/parallel.hpp"
#include "chart_loop.hpp"

namespace blowup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Blowup time at eps resolution only (no refinement reruns) for ranking.
struct QuickRun {
    bool blew_up = false;
    double T = kInf;
};

QuickRun quick_time(const ControlSystem& sys, const ControlLaw& law,
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
    const detail::ChartLoopResult r = detail::run_chart_loop(cfg, st, false);
    QuickRun q;
    q.blew_up = r.blew_up;
    if (r.blew_up) q.T = r.T_hat;
    return q;
}

ControlLaw assignment_law(const std::vector<int>& digits, const std::vector<Vec>& values,
                          double window) {
    const int k = static_cast<int>(digits.size());
    std::vector<double> bp;
    std::vector<Vec> vals;
    for (int j = 0; j < k; ++j) {
        const Vec& v = values[static_cast<size_t>(digits[static_cast<size_t>(j)])];
        if (!vals.empty() && vals.back() == v) continue;
        bp.push_back(window * j / k);
        vals.push_back(v);
    }
    return ControlLaw::piecewise(std::move(bp), std::move(vals));
}

}  // namespace

BruteForceResult brute_force(const ControlSystem& sys, Mode mode,
                             const std::vector<Vec>& values, const BruteForceOptions& bf,
                             const IntegrateOptions& opts_in) {
    if (values.empty()) throw PreconditionError("brute_force needs control values");
    if (bf.k <= 0) throw PreconditionError("brute_force needs k >= 1");
    const double combos = std::pow(static_cast<double>(values.size()), bf.k);
    if (combos > static_cast<double>(bf.budget))
        throw BudgetExceeded("enumeration of " + std::to_string(combos) +
                             " laws exceeds the budget of " + std::to_string(bf.budget));

    const IntegrateOptions opts = resolve_defaults(sys, opts_in);

    // Adaptive window: the largest blowup time among the constant laws.
    double window = bf.window;
    if (window <= 0.0) {
        for (const Vec& v : values) {
            const QuickRun q = quick_time(sys, ControlLaw::constant(v), opts);
            if (q.blew_up) window = std::max(window, q.T);
        }
        if (window <= 0.0) window = opts.t_max;
    }

    std::vector<int> digits(static_cast<size_t>(bf.k), 0);
    std::vector<int> best_digits;
    double best_T = (mode == Mode::TI) ? kInf : -kInf;
    long evaluated = 0;
    bool saw_nonblowup = false;
    std::vector<BruteForceResult::Candidate> candidates;

    for (;;) {
        const ControlLaw law = assignment_law(digits, values, window);
        const QuickRun q = quick_time(sys, law, opts);
        ++evaluated;
        candidates.push_back({digits, q.blew_up ? q.T : 0.0, q.blew_up});
        if (!q.blew_up) {
            saw_nonblowup = true;
        } else if ((mode == Mode::TI && q.T < best_T) ||
                   (mode == Mode::TS && q.T > best_T)) {
            best_T = q.T;
            best_digits = digits;
        }
        // Odometer.
        int pos = bf.k - 1;
        while (pos >= 0 && ++digits[static_cast<size_t>(pos)] ==
                               static_cast<int>(values.size())) {
            digits[static_cast<size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }

    if (mode == Mode::TS && saw_nonblowup) {
        // U_ad = U fails within t_max: decisive when the zeta audit also fails.
        const AssumptionReport rep = audit(sys, opts.t_max);
        std::ostringstream msg;
        msg << "a law failed to blow up by t_max=" << opts.t_max;
        if (!rep.passed("P5"))
            throw NotWellPosed(msg.str() + " and the (P5) zeta audit fails");
        throw PreconditionError(msg.str() +
                                " although (P5) passes; raise t_max for the TS enumeration");
    }
    if (best_digits.empty()) throw NoBlowupError("no enumerated law blows up before t_max");

    BruteForceResult out;
    out.assignment = best_digits;
    out.law = assignment_law(best_digits, values, window);
    out.window = window;
    out.evaluated = evaluated;
    out.candidates = std::move(candidates);
    out.T = blowup_time(sys, out.law, opts).first;
    return out;
}

// ---------------------------------------------------------------------------
// Costate-sphere sweep

namespace {

std::vector<Vec> sphere_directions(int n, int n_dirs, uint64_t seed) {
    std::vector<Vec> dirs;
    if (n == 1) {
        dirs = {{1.0}, {-1.0}};
        return dirs;
    }
    if (n == 2) {
        for (int i = 0; i < n_dirs; ++i) {
            const double a = 2.0 * M_PI * i / n_dirs;
            dirs.push_back({std::cos(a), std::sin(a)});
        }
        return dirs;
    }
    if (n == 3) {
        const double ga = M_PI * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < n_dirs; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / n_dirs;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            dirs.push_back({r * std::cos(ga * i), r * std::sin(ga * i), z});
        }
        return dirs;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    while (static_cast<int>(dirs.size()) < n_dirs) {
        Vec d(static_cast<size_t>(n));
        for (auto& v : d) v = gauss(rng);
        const double m = norm(d);
        if (m > 1e-12) dirs.push_back(scaled(d, 1.0 / m));
    }
    return dirs;
}

}  // namespace

std::vector<SweepCandidate> sphere_sweep(const ControlSystem& sys, Mode mode, int n_dirs,
                                         const IntegrateOptions& opts, int jobs,
                                         uint64_t sampler_seed) {
    if (n_dirs < 2) throw PreconditionError("sphere_sweep needs n_dirs >= 2");
    const std::vector<Vec> dirs = sphere_directions(sys.n, n_dirs, sampler_seed);
    std::vector<SweepCandidate> out(dirs.size());

    parallel_for(static_cast<int>(dirs.size()), jobs, [&](int i) {
        SweepCandidate& c = out[static_cast<size_t>(i)];
        c.index = i;
        c.psi0 = dirs[static_cast<size_t>(i)];
        try {
            const ShootResult sr = shoot(sys, c.psi0, opts, mode);
            if (sr.traj.blowup) {
                c.blew_up = true;
                c.T_hat = sr.traj.blowup->T_hat;
                c.err = sr.traj.blowup->err;
            }
            c.report = certify(sr.traj, sr.costate, sys, mode);
        } catch (const Error& e) {
            c.error = e.what();
        }
    });

    bool any_usable = false;
    for (const auto& c : out)
        if (c.error.empty() && c.report.n_degenerate < c.report.n_samples) any_usable = true;
    if (!any_usable) throw Error("sphere_sweep: all directions degenerate or failed");

    std::stable_sort(out.begin(), out.end(), [&](const SweepCandidate& a,
                                                 const SweepCandidate& b) {
        const bool ua = a.error.empty() && a.blew_up, ub = b.error.empty() && b.blew_up;
        if (ua != ub) return ua;  // usable candidates first
        if (!ua) return a.index < b.index;
        if (a.T_hat != b.T_hat)
            return mode == Mode::TI ? a.T_hat < b.T_hat : a.T_hat > b.T_hat;
        return a.index < b.index;
    });
    return out;
}

std::vector<std::string> sweep_audit_warnings(const ControlSystem& sys, Mode mode,
                                              double horizon) {
    std::vector<std::string> warnings;
    const AssumptionReport rep = audit(sys, horizon);
    const std::vector<std::string> needed =
        mode == Mode::TI ? std::vector<std::string>{"S1", "S2", "S3", "S4", "S5"}
                         : std::vector<std::string>{"S1", "S2", "S3", "S4", "S5'", "P5"};
    for (const auto& id : needed) {
        const AssumptionCheck* c = rep.find(id);
        if (!c || c->status == CheckStatus::Pass) continue;
        warnings.push_back(id + (c->status == CheckStatus::Fail ? " fails: " : " unchecked: ") +
                           c->witness.note);
    }
    return warnings;
}

CrossValidation cross_validate(const ControlSystem& sys, Mode mode, int k,
                               const std::vector<Vec>& values, int n_dirs,
                               const IntegrateOptions& opts_in, int jobs) {
    const IntegrateOptions opts = resolve_defaults(sys, opts_in);

    CrossValidation cv;
    BruteForceOptions bf;
    bf.k = k;
    cv.brute = brute_force(sys, mode, values, bf, opts);
    cv.T_brute = cv.brute.T;

    const auto ranked = sphere_sweep(sys, mode, n_dirs, opts, jobs);
    auto top = std::find_if(ranked.begin(), ranked.end(),
                            [](const SweepCandidate& c) { return c.error.empty() && c.blew_up; });
    if (top == ranked.end())
        throw ConsistencyFailure("cross_validate: no sweep direction produced a blowup");
    cv.sweep_top = *top;
    cv.T_sweep = top->T_hat;

    // One-flip sensitivity of the brute optimum as the discretization slack.
    double slack = 0.0;
    for (int j = 0; j < k; ++j) {
        for (int v = 0; v < static_cast<int>(values.size()); ++v) {
            if (v == cv.brute.assignment[static_cast<size_t>(j)]) continue;
            std::vector<int> digits = cv.brute.assignment;
            digits[static_cast<size_t>(j)] = v;
            const QuickRun q =
                quick_time(sys, assignment_law(digits, values, cv.brute.window), opts);
            if (q.blew_up) slack = std::max(slack, std::abs(q.T - cv.T_brute));
        }
    }
    cv.slack = slack;

    const double tol = slack + 1e-9 * (1.0 + std::abs(cv.T_brute));
    cv.consistent = (mode == Mode::TI) ? (cv.T_sweep <= cv.T_brute + tol)
                                       : (cv.T_sweep >= cv.T_brute - tol);
    if (!cv.consistent) {
        std::ostringstream msg;
        msg << "cross_validate inconsistency (" << (mode == Mode::TI ? "TI" : "TS")
            << "): sweep T=" << cv.T_sweep << " vs brute T=" << cv.T_brute
            << " with slack " << slack << "; brute assignment:";
        for (int d : cv.brute.assignment) msg << ' ' << d;
        throw ConsistencyFailure(msg.str());
    }
    return cv;
}

}  // namespace blowup
