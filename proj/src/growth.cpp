#include "blowup/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "blowup/dynamics.hpp"
#include "blowup/quad.hpp"

namespace blowup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> g;
    g.reserve(static_cast<size_t>(count));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < count; ++i)
        g.push_back(std::exp(llo + (lhi - llo) * i / (count - 1)));
    return g;
}

std::vector<double> lin_grid(double lo, double hi, int count) {
    std::vector<double> g;
    g.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) g.push_back(lo + (hi - lo) * i / (count - 1));
    return g;
}

// inf over t-grid of G(t,r)/r.
double ratio_inf_t(const ControlSystem& sys, const std::vector<double>& ts, double r) {
    double m = kInf;
    for (double t : ts) {
        const double v = sys.growth.G(t, r) / r;
        if (std::isnan(v)) return std::numeric_limits<double>::quiet_NaN();
        m = std::min(m, v);
    }
    return m;
}

// Integrand of Omega~: G_r(t, phi(s)) - G(t, phi(s)) phi''(s)/phi'(s)^2,
// assembled from the stable composites.
double omega_tilde_inner(const ControlSystem& sys, double t, double s) {
    const double d2_over_d1 = sys.compactifier.phi_d2(s) / sys.compactifier.phi_d1(s);
    return sys.growth_r_at_phi(t, s) - sys.growth_over_phi_d1(t, s) * d2_over_d1;
}

double omega_tilde_value(const ControlSystem& sys, double T, double rho, double r_cap,
                         int grid, int t_grid) {
    const auto ts = lin_grid(0.0, T, t_grid);
    const auto rs = log_grid(rho, r_cap, grid);
    double m = kInf;
    long finite = 0;
    for (double r : rs) {
        const double s = sys.compactifier.Phi(r);
        for (double t : ts) {
            const double v = omega_tilde_inner(sys, t, s);
            if (!std::isfinite(v)) continue;
            ++finite;
            m = std::min(m, v);
        }
    }
    if (finite == 0) return -kInf;
    return m;
}

// Grid suprema behind omega0/omega1 (faithful to the sup definitions; the
// catalog compactifiers are monotone so the sup sits at the right endpoint).
double omega0_value(const ControlSystem& sys, double s) {
    double m = 0.0;
    for (double sq : log_grid(s * 1e-6, s, 64)) m = std::max(m, 1.0 / sys.compactifier.phi(sq));
    return m;
}

double omega1_value(const ControlSystem& sys, double s) {
    double m = 0.0;
    for (double sq : log_grid(s * 1e-6, s, 64))
        m = std::max(m, std::abs(sys.compactifier.ratio_phi_d1(sq)));
    return m;
}

}  // namespace

OmegaTResult omega_T(const ControlSystem& sys, double T, double rho, double r_max, int grid) {
    if (!(rho > 0.0) || !(r_max > rho))
        throw PreconditionError("omega_T requires 0 < rho < r_max");
    const auto ts = lin_grid(0.0, T, 33);
    OmegaTResult out;
    out.value = kInf;
    for (double r : log_grid(rho, r_max, grid)) {
        const double q = ratio_inf_t(sys, ts, r);
        if (std::isnan(q)) throw EvaluationFailure("G(t,r)/r evaluated to NaN");
        out.value = std::min(out.value, q);
    }
    // Superlinear evidence: the t-inf ratio still grows over the last decade.
    const double q_last = ratio_inf_t(sys, ts, r_max);
    const double q_prev = ratio_inf_t(sys, ts, r_max / 10.0);
    out.superlinear = std::isinf(q_last) || q_last >= 1.01 * q_prev;
    return out;
}

ThresholdBundle rho_threshold(const ControlSystem& sys, double T, double M,
                              const RhoSearchOptions& opts) {
    if (!sys.compactifier.phi)
        throw PreconditionError("rho_threshold requires a compactifier");
    const double s0 = sys.compactifier.s0;
    const double rho_lo =
        std::max(2.0 * M, sys.compactifier.phi(s0) * (1.0 + 1e-9)) * (1.0 + 1e-12);

    struct Eval {
        double Omega_T = 0.0, omega0 = 0.0, omega1 = 0.0, omega_val = 0.0,
               Omega_tilde = 0.0;
        bool caveat = false;
        int failing = 0;  // 0 = all pass, else 1-based index of first failure
    };
    // Cheap conditions first; the two grid infima only when those pass.
    auto evaluate = [&](double rho) {
        Eval e;
        const double s = sys.compactifier.Phi(rho);
        if (!(rho > 2.0 * M)) {
            e.failing = 2;
            return e;
        }
        e.omega0 = omega0_value(sys, s);
        if (!(e.omega0 <= 1.0)) {
            e.failing = 3;
            return e;
        }
        e.omega1 = omega1_value(sys, s);
        if (!(e.omega1 <= 1.0)) {
            e.failing = 4;
            return e;
        }
        e.omega_val = sys.compactifier.omega ? sys.compactifier.omega(s) : kInf;
        if (!(e.omega_val <= 1.0 / (4.0 * M + 1.0))) {
            e.failing = 5;
            return e;
        }
        const double r_cap = std::max(1e8, rho * opts.r_cap_factor);
        OmegaTResult ot = omega_T(sys, T, rho, r_cap, opts.grid);
        e.Omega_T = ot.value;
        e.caveat = !ot.superlinear;
        if (!(e.Omega_T >= M + 1.0)) {
            e.failing = 1;
            return e;
        }
        e.Omega_tilde = omega_tilde_value(sys, T, rho, r_cap, opts.grid, opts.t_grid);
        if (!(e.Omega_tilde >= 18.0 * M)) {
            e.failing = 6;
            return e;
        }
        return e;
    };

    const auto grid = log_grid(rho_lo, opts.rho_max, opts.grid);
    double found = -1.0;
    Eval found_eval;
    for (size_t i = 0; i < grid.size(); ++i) {
        Eval e = evaluate(grid[i]);
        if (e.failing == 0) {
            found = grid[i];
            found_eval = e;
            if (i > 0) {
                for (double rho : log_grid(grid[i - 1], grid[i], opts.refine)) {
                    Eval er = evaluate(rho);
                    if (er.failing == 0) {
                        found = rho;
                        found_eval = er;
                        break;
                    }
                }
            }
            break;
        }
    }
    if (found < 0.0) {
        static const char* names[] = {"",
                                      "Omega_T(rho) >= M+1",
                                      "rho > 2M",
                                      "omega0(Phi(rho)) <= 1",
                                      "omega1(Phi(rho)) <= 1",
                                      "omega(Phi(rho)) <= 1/(4M+1)",
                                      "Omega~(rho) >= 18M"};
        Eval e = evaluate(opts.rho_max);
        std::ostringstream msg;
        msg << "no rho <= " << opts.rho_max << " satisfies the (3.12) conditions; "
            << "first failing at rho_max: " << names[e.failing];
        throw NotSatisfiableError(msg.str());
    }

    ThresholdBundle b;
    b.rho = found;
    b.M = M;
    b.Omega_T = found_eval.Omega_T;
    b.omega0 = found_eval.omega0;
    b.omega1 = found_eval.omega1;
    b.omega_val = found_eval.omega_val;
    b.Omega_tilde = found_eval.Omega_tilde;
    b.horizon = T;
    b.monotone_caveat = found_eval.caveat;
    return b;
}

// ---------------------------------------------------------------------------
// Assumption audit

namespace {

struct SubCheck {
    bool pass = true;
    bool not_checkable = false;
    AssumptionCheck::Witness witness;
};

SubCheck check_G_zero(const ControlSystem& sys, double T) {
    SubCheck c;
    for (double t : lin_grid(0.0, T, 17)) {
        const double v = sys.growth.G(t, 0.0);
        if (!(std::abs(v) <= 1e-12)) {
            c.pass = false;
            c.witness = {t, 0.0, v, "G(t,0) != 0"};
            return c;
        }
    }
    c.witness.note = "G(t,0)=0 on 17-point t grid";
    return c;
}

SubCheck check_Gr_bounded(const ControlSystem& sys) {
    SubCheck c;
    double worst = 0.0;
    for (double cap : {1.0, 10.0, 100.0}) {
        for (double t : lin_grid(0.0, cap, 17))
            for (double r : lin_grid(0.0, cap, 33)) {
                const double v = sys.growth.G_r(t, r);
                if (!std::isfinite(v)) {
                    c.pass = false;
                    c.witness = {t, r, v, "G_r non-finite on compact box"};
                    return c;
                }
                worst = std::max(worst, std::abs(v));
            }
    }
    c.witness = {0.0, 0.0, worst, "max |G_r| over [0,M]^2, M in {1,10,100}"};
    return c;
}

// Divergence of inf_t G(t,r)/r along decades; overflow counts as divergence.
SubCheck check_superlinear(const ControlSystem& sys, double T) {
    SubCheck c;
    const auto ts = lin_grid(0.01 * std::max(T, 1.0), std::max(T, 1.0), 17);
    std::vector<double> q;
    for (int i = 1; i <= 8; ++i) {
        const double r = std::pow(10.0, i);
        double m = kInf;
        for (double t : ts) m = std::min(m, sys.growth.G(t, r) / r);
        q.push_back(m);
    }
    for (size_t i = 1; i < q.size(); ++i)
        if (q[i] < q[i - 1] * (1.0 - 1e-9)) {
            c.pass = false;
            c.witness = {0.0, std::pow(10.0, static_cast<double>(i + 1)), q[i],
                         "G(t,r)/r decreasing across decades"};
            return c;
        }
    const bool diverging = std::isinf(q[7]) ||
                           (q[7] >= 4.0 * std::max(q[0], 1e-300) && q[7] >= 1.01 * q[6]);
    if (!diverging) {
        c.pass = false;
        c.witness = {0.0, 1e8, q[7], "G(t,r)/r not diverging by r=1e8"};
        return c;
    }
    c.witness = {0.0, 1e8, q[7], "inf_t G/r along decades 10..1e8"};
    return c;
}

SubCheck check_rGr_over_G(const ControlSystem& sys, double T) {
    SubCheck c;
    const auto ts = lin_grid(0.01 * std::max(T, 1.0), std::max(T, 1.0), 9);
    std::vector<std::pair<double, double>> tail;  // (r, inf_t ratio), finite only
    for (int i = 1; i <= 8; ++i) {
        const double r = std::pow(10.0, i);
        double m = kInf;
        bool fin = true;
        for (double t : ts) {
            const double v = r * sys.growth.G_r(t, r) / sys.growth.G(t, r);
            if (!std::isfinite(v)) {
                fin = false;
                break;
            }
            m = std::min(m, v);
        }
        if (fin) tail.emplace_back(r, m);
    }
    if (tail.empty()) {
        c.pass = false;
        c.witness = {0.0, 0.0, 0.0, "r G_r/G not finite at any probe decade"};
        return c;
    }
    const size_t keep = std::min<size_t>(4, tail.size());
    double m = kInf, r_at = 0.0;
    for (size_t i = tail.size() - keep; i < tail.size(); ++i)
        if (tail[i].second < m) {
            m = tail[i].second;
            r_at = tail[i].first;
        }
    c.pass = m >= 0.05;
    c.witness = {0.0, r_at, m, "liminf proxy: min of inf_t r G_r/G on trailing decades"};
    return c;
}

SubCheck check_phi_shape(const ControlSystem& sys) {
    SubCheck c;
    const double s0 = sys.compactifier.s0;
    for (double s : log_grid(s0 * 1e-4, s0 * (1.0 - 1e-9), 64)) {
        const double ph = sys.compactifier.phi(s);
        const double d1 = sys.compactifier.phi_d1(s);
        if (std::isnan(ph) || std::isnan(d1) || !(ph > 2.0) || !(d1 < 0.0)) {
            c.pass = false;
            c.witness = {0.0, s, ph, "phi > 2 or phi' < 0 violated"};
            return c;
        }
    }
    c.witness.note = "phi > 2 and phi' < 0 on (0, s0)";
    return c;
}

// (3.6) on the dyadic sequence s0 * 2^-k: phi must keep increasing with
// non-decaying increments (covers both power-like and logarithmic divergence;
// a saturating phi has geometrically vanishing increments), |phi'| must grow
// past 1e4 and phi/phi' must vanish.
SubCheck check_phi_limits(const ControlSystem& sys) {
    SubCheck c;
    const double s0 = sys.compactifier.s0;
    double phi_prev = 0.0, delta_first = 0.0, delta_last = 0.0;
    double last_ratio = kInf, first_ratio = 0.0;
    bool overflowed = false;
    for (int k = 0; k <= 24; ++k) {
        const double s = s0 * std::pow(2.0, -k) * (1.0 - 1e-12);
        const double ph = sys.compactifier.phi(s);
        const double d1 = sys.compactifier.phi_d1(s);
        const double ratio = std::abs(sys.compactifier.ratio_phi_d1(s));
        if (std::isnan(ratio)) {
            c.pass = false;
            c.witness = {0.0, s, ratio, "phi/phi' evaluated to NaN"};
            return c;
        }
        if (k == 0) first_ratio = ratio;
        last_ratio = ratio;
        if (std::isinf(ph)) {
            overflowed = true;  // diverged past double range: limit reached
            break;
        }
        if (k > 0) {
            const double delta = ph - phi_prev;
            if (!(delta > 0.0)) {
                c.pass = false;
                c.witness = {0.0, s, ph, "phi not increasing as s -> 0+"};
                return c;
            }
            if (k == 1) delta_first = delta;
            delta_last = delta;
        }
        phi_prev = ph;
        if (k == 24 && !(std::abs(d1) >= 1e4)) {
            c.pass = false;
            c.witness = {0.0, s, d1, "|phi'| not diverging by s0*2^-24"};
            return c;
        }
    }
    if (!overflowed && delta_last < 0.25 * delta_first) {
        c.pass = false;
        c.witness = {0.0, 0.0, delta_last, "phi increments decaying: phi saturating"};
        return c;
    }
    if (!(last_ratio <= 1e-3) || !(last_ratio <= 0.5 * first_ratio)) {
        c.pass = false;
        c.witness = {0.0, 0.0, last_ratio, "phi/phi' not vanishing as s -> 0+"};
        return c;
    }
    c.witness = {0.0, 0.0, last_ratio, "phi -> inf, phi' -> -inf, phi/phi' -> 0"};
    return c;
}

SubCheck check_modulus_bound(const ControlSystem& sys, double T) {
    SubCheck c;
    if (!sys.compactifier.omega) {
        c.pass = false;
        c.witness.note = "no omega stored";
        return c;
    }
    const double s0 = sys.compactifier.s0;
    long checked = 0, skipped = 0;
    for (double s : log_grid(s0 * 1e-3, s0 * (1.0 - 1e-9), 48)) {
        const double ph = sys.compactifier.phi(s);
        const double d1 = sys.compactifier.phi_d1(s);
        const double d2 = sys.compactifier.phi_d2(s);
        const double lhs = 1.0 + std::abs(d1) / (ph * ph) + std::abs(ph * d2 / (d1 * d1));
        if (!std::isfinite(lhs)) {
            ++skipped;  // phi overflow: bound vacuous at double range
            continue;
        }
        for (double t : lin_grid(0.0, T, 9)) {
            const double inner = omega_tilde_inner(sys, t, s);
            if (!std::isfinite(inner)) {
                ++skipped;
                continue;
            }
            ++checked;
            const double rhs = sys.compactifier.omega(s) * inner;
            if (!(lhs <= rhs * (1.0 + 1e-9) + 1e-12)) {
                c.pass = false;
                c.witness = {t, s, lhs - rhs, "(3.7) bound violated"};
                return c;
            }
        }
    }
    if (checked == 0) {
        c.pass = false;
        c.witness.note = "no finite samples for the (3.7) bound";
        return c;
    }
    c.witness = {0.0, 0.0, static_cast<double>(checked),
                 "samples checked (" + std::to_string(skipped) + " skipped non-finite)"};
    return c;
}

SubCheck check_drift_bounded(const ControlSystem& sys, double T) {
    SubCheck c;
    double worst = 0.0;
    for (double t : lin_grid(0.0, T, 33)) {
        const double v = op_norm(sys.drift.A(t));
        if (!std::isfinite(v)) {
            c.pass = false;
            c.witness = {t, 0.0, v, "||A(t)|| non-finite"};
            return c;
        }
        worst = std::max(worst, v);
    }
    const double mb = sys.controls.bound ? sys.controls.bound(0.0, T) : 0.0;
    if (!std::isfinite(mb)) {
        c.pass = false;
        c.witness = {0.0, 0.0, mb, "sup |b| non-finite"};
        return c;
    }
    c.witness = {0.0, 0.0, std::max(worst, mb), "max(sup||A||, sup|b|) on [0,T]"};
    return c;
}

SubCheck check_zeta_domination(const ControlSystem& sys, double T) {
    SubCheck c;
    const auto& z = *sys.zeta;
    const double mb = sys.controls.bound(0.0, T);
    for (double t : lin_grid(0.0, T, 9)) {
        const double an = op_norm(sys.drift.A(t));
        for (double r : log_grid(z.R0, 1e6, 48)) {
            const double lhs = sys.growth.G(t, r) - an * r - mb;
            const double zr = z.zeta(r);
            if (std::isnan(lhs) || std::isnan(zr) || zr < 0.0 ||
                lhs < zr - 1e-9 * (1.0 + std::abs(zr))) {
                c.pass = false;
                c.witness = {t, r, lhs - zr, "(2.4) domination fails"};
                return c;
            }
        }
    }
    c.witness.note = "(2.4) holds on [0,T] x [R0, 1e6]";
    return c;
}

SubCheck check_zeta_integrable(const ControlSystem& sys) {
    SubCheck c;
    const auto& z = *sys.zeta;
    auto f = [&](double r) { return 1.0 / z.zeta(r); };
    const QuadResult q = tail_integral(f, z.R0, 1e-10, 1e6);
    c.pass = q.converged;
    c.not_checkable = !q.converged && !q.diverged;
    c.witness = {0.0, z.R0, q.value,
                 q.converged   ? "tail integral of 1/zeta"
                 : q.diverged  ? "tail integral of 1/zeta diverges"
                               : "quadrature did not settle"};
    return c;
}

// Minimum of the support function of b(t,U) over a direction grid: positive
// iff the origin is interior to the convex hull.
double min_support(const ControlSystem& sys, double T) {
    const int n = sys.n;
    std::vector<Vec> dirs;
    if (n == 1) {
        dirs = {{1.0}, {-1.0}};
    } else if (n == 2) {
        for (int i = 0; i < 64; ++i) {
            const double a = 2.0 * M_PI * i / 64.0;
            dirs.push_back({std::cos(a), std::sin(a)});
        }
    } else {
        // Fibonacci sphere directions (n = 3), Gaussian probe above.
        if (n == 3) {
            const double ga = M_PI * (3.0 - std::sqrt(5.0));
            for (int i = 0; i < 128; ++i) {
                const double zc = 1.0 - 2.0 * (i + 0.5) / 128.0;
                const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
                dirs.push_back({rr * std::cos(ga * i), rr * std::sin(ga * i), zc});
            }
        } else {
            unsigned long long state = 0x9e3779b97f4a7c15ull;
            auto rng = [&]() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                return static_cast<double>(state % 1000003) / 1000003.0 - 0.5;
            };
            for (int i = 0; i < 256; ++i) {
                Vec d(static_cast<size_t>(n));
                for (auto& v : d) v = rng();
                const double m = norm(d);
                if (m > 1e-9) dirs.push_back(scaled(d, 1.0 / m));
            }
        }
    }

    double worst = kInf;
    for (double t : lin_grid(0.0, T, 9)) {
        for (const Vec& d : dirs) {
            double sup = -kInf;
            switch (sys.controls.kind) {
                case ControlKind::LinearBall:
                    sup = sys.controls.radius * norm(mul_t(sys.controls.B(t), d));
                    break;
                case ControlKind::FiniteSet:
                    for (const Vec& u : sys.controls.values)
                        sup = std::max(sup, dot(d, sys.controls.b(t, u)));
                    break;
                case ControlKind::CustomConvex:
                    sup = sys.controls.support ? sys.controls.support(t, d).value : kInf;
                    break;
            }
            worst = std::min(worst, sup);
        }
    }
    return worst;
}

AssumptionCheck combine(const std::string& id, std::initializer_list<const SubCheck*> subs) {
    AssumptionCheck out;
    out.id = id;
    out.status = CheckStatus::Pass;
    for (const SubCheck* s : subs) {
        if (!s->pass && !s->not_checkable) {
            out.status = CheckStatus::Fail;
            out.witness = s->witness;
            return out;
        }
    }
    for (const SubCheck* s : subs) {
        if (s->not_checkable) {
            out.status = CheckStatus::NotCheckable;
            out.witness = s->witness;
            return out;
        }
    }
    out.witness = (*(subs.end() - 1))->witness;
    return out;
}

}  // namespace

AssumptionReport audit(const ControlSystem& sys, double T) {
    AssumptionReport rep;

    auto push = [&](AssumptionCheck c) { rep.checks.push_back(std::move(c)); };
    auto structural = [&](const std::string& id, CheckStatus st, const std::string& note) {
        AssumptionCheck c;
        c.id = id;
        c.status = st;
        c.witness.note = note;
        push(std::move(c));
    };

    // (P1)/(S1): control values live in R^m — a separable metric space.
    structural("P1", CheckStatus::Pass, "U is a subset of R^m");
    structural("S1", CheckStatus::Pass, "U is a subset of R^m");

    const SubCheck g0 = check_G_zero(sys, T);
    const SubCheck gr = check_Gr_bounded(sys);
    push(combine("P2", {&g0, &gr}));

    const SubCheck drift = check_drift_bounded(sys, T);
    push(combine("P3", {&drift}));

    // (P4): structural convexity of b(t,U).
    switch (sys.controls.kind) {
        case ControlKind::LinearBall:
            structural("P4", CheckStatus::Pass, "linear image of a ball is convex compact");
            break;
        case ControlKind::FiniteSet:
            if (sys.controls.values.size() == 1)
                structural("P4", CheckStatus::Pass, "singleton control set");
            else
                structural("P4", CheckStatus::Fail,
                           "finite set with >1 point is not convex");
            break;
        case ControlKind::CustomConvex:
            structural("P4", CheckStatus::NotCheckable, "convexity declared, not verified");
            break;
    }

    // (P5): zeta domination + integrability.
    if (!sys.zeta) {
        structural("P5", CheckStatus::NotCheckable, "no zeta bound supplied");
    } else {
        const SubCheck dom = check_zeta_domination(sys, T);
        const SubCheck integ = check_zeta_integrable(sys);
        push(combine("P5", {&dom, &integ}));
    }

    const SubCheck sup = check_superlinear(sys, T);
    const SubCheck ratio = check_rGr_over_G(sys, T);
    push(combine("S2", {&g0, &gr, &sup, &ratio}));

    if (sys.compactifier.phi) {
        const SubCheck shape = check_phi_shape(sys);
        const SubCheck limits = check_phi_limits(sys);
        const SubCheck mod = check_modulus_bound(sys, T);
        push(combine("S3", {&shape, &limits, &mod}));
    } else {
        structural("S3", CheckStatus::NotCheckable, "no compactifier supplied");
    }

    push(combine("S4", {&drift}));

    // (S5)/(S5')/(S5''): geometry of b(t,U) around the origin.
    const double support_min = min_support(sys, T);
    const bool interior = support_min > 1e-12;
    switch (sys.controls.kind) {
        case ControlKind::LinearBall: {
            double smin = kInf;
            double bnorm = 0.0;
            for (double t : lin_grid(0.0, T, 17)) {
                const Mat B = sys.controls.B(t);
                smin = std::min(smin, min_singular_value(B));
                bnorm = std::max(bnorm, op_norm(B));
            }
            const bool full_rank = smin > 1e-12 * std::max(1.0, bnorm);
            AssumptionCheck c;
            c.id = "S5";
            c.status = full_rank ? CheckStatus::Pass : CheckStatus::Fail;
            c.witness = {0.0, 0.0, smin,
                         full_rank ? "B(t) full row rank; ball image strictly convex"
                                   : "B(t) rank deficient"};
            push(std::move(c));
            break;
        }
        case ControlKind::FiniteSet:
            if (sys.controls.values.size() == 1)
                structural("S5", CheckStatus::Fail, "singleton set has no interior");
            else
                structural("S5", CheckStatus::Fail,
                           "polytope vertices have non-unique outward normals");
            break;
        case ControlKind::CustomConvex:
            structural("S5", CheckStatus::NotCheckable, "boundary normals not sampled");
            break;
    }
    {
        AssumptionCheck c;
        c.id = "S5'";
        c.status = interior ? CheckStatus::Pass : CheckStatus::Fail;
        c.witness = {0.0, 0.0, support_min, "min over directions of the support of b(t,U)"};
        push(std::move(c));
        AssumptionCheck c2;
        c2.id = "S5''";
        c2.status = (support_min >= -1e-12) ? CheckStatus::Pass : CheckStatus::Fail;
        c2.witness = {0.0, 0.0, support_min, "0 in closure(b(t,U)) via support sampling"};
        push(std::move(c2));
    }

    return rep;
}

nlohmann::json report_json(const AssumptionReport& rep) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : rep.checks) {
        nlohmann::json e;
        e["id"] = c.id;
        e["status"] = c.status == CheckStatus::Pass
                          ? "pass"
                          : (c.status == CheckStatus::Fail ? "fail" : "not-checkable");
        e["witness"] = {{"t", c.witness.t},
                        {"r", c.witness.r},
                        {"value", c.witness.value},
                        {"note", c.witness.note}};
        arr.push_back(std::move(e));
    }
    return arr;
}

// ---------------------------------------------------------------------------
// Growth exponent integral

GrowthExponent growth_exponent_integral(const Trajectory& traj, const ControlSystem& sys) {
    TrajectoryView view(sys, traj);
    auto integrand = [&](double t) {
        const RadialPoint rp = view.radial(t);
        if (rp.chart == Chart::Outer) {
            const double r = rp.rad;
            if (r <= 0.0) return 0.0;
            return sys.growth.G_r(t, r) - sys.growth.G(t, r) / r;
        }
        return sys.growth_r_at_phi(t, rp.rad) - sys.growth_over_r_at_phi(t, rp.rad);
    };

    // Nodal values: the co-integrated samples when the integrator produced
    // them (integration-grade accuracy), interval Simpson otherwise.
    const auto& ss = traj.samples;
    bool have_nodal = true;
    for (const auto& s : ss)
        if (!std::isfinite(s.g_exp)) {
            have_nodal = false;
            break;
        }

    GrowthExponent g;
    g.ts_.reserve(ss.size());
    g.gs_.reserve(ss.size());
    double acc = 0.0;
    g.ts_.push_back(ss.front().t);
    g.gs_.push_back(0.0);
    g.ends_.push_back(integrand(ss.front().t));
    for (size_t k = 0; k + 1 < ss.size(); ++k) {
        const double a = ss[k].t, b = ss[k + 1].t, mid = 0.5 * (a + b);
        const double fa = g.ends_.back();
        const double fm = integrand(mid);
        const double fb = integrand(b);
        if (have_nodal)
            acc = ss[k + 1].g_exp - ss.front().g_exp;
        else
            acc += (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        g.ts_.push_back(b);
        g.gs_.push_back(acc);
        g.ends_.push_back(fb);
        g.mids_.push_back(mid);
        g.midval_.push_back(fm);
    }
    return g;
}

double GrowthExponent::operator()(double t) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(ts_.back()));
    if (t < ts_.front() - slack || t > ts_.back() + slack)
        throw PreconditionError("growth exponent query beyond trajectory range");
    size_t lo = 0, hi = ts_.size() - 1;
    while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        (ts_[mid] <= t ? lo : hi) = mid;
    }
    const double h = ts_[lo + 1] - ts_[lo];
    const double X = std::clamp((t - ts_[lo]) / h, 0.0, 1.0);
    // Integral of the Lagrange quadratic through the interval's three nodes,
    // rescaled so the full-interval value matches the stored increment.
    const double a = ends_[lo], b = midval_[lo], c = ends_[lo + 1];
    const double X2 = X * X, X3 = X2 * X;
    const double ia = (2.0 / 3.0) * X3 - 1.5 * X2 + X;
    const double ib = -(4.0 / 3.0) * X3 + 2.0 * X2;
    const double ic = (2.0 / 3.0) * X3 - 0.5 * X2;
    const double partial = h * (a * ia + b * ib + c * ic);
    const double whole = h * (a + 4.0 * b + c) / 6.0;
    const double increment = gs_[lo + 1] - gs_[lo];
    if (whole != 0.0 && std::abs(whole - increment) <= 0.5 * std::abs(whole))
        return gs_[lo] + partial * (increment / whole);
    return gs_[lo] + partial + X * (increment - whole);
}

}  // namespace blowup
