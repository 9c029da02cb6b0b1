#include "blowup/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blowup {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sampled infimum of the catalog coefficient, used to build the modulus omega.
// Grid documented: 129 uniform points on [0, 100].
double coeff_inf(const std::function<double(double)>& g) {
    double lo = kInf;
    for (int i = 0; i <= 128; ++i) lo = std::min(lo, g(100.0 * i / 128.0));
    return lo;
}

void reject_nonpositive_coeff(const std::function<double(double)>& g) {
    for (int i = 0; i <= 128; ++i) {
        const double t = 100.0 * i / 128.0;
        const double v = g(t);
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError("catalog coefficient g(t) must be positive and finite; g(" +
                              std::to_string(t) + ")=" + std::to_string(v));
    }
}

// ln(1 + phi(s)) for the logpower kind, phi(s) = exp(s^-beta); stable when phi
// overflows.
double log1p_phi_logpower(double s, double beta) {
    const double w = std::pow(s, -beta);
    if (w > 700.0) return w;  // log1p(e^-w) below double resolution
    return w + std::log1p(std::exp(-w));
}

// (1 + s^-beta)^(p-1) for the exponential kind, stable for tiny s.
double exp_growth_factor(double s, double beta, double p) {
    const double w = std::pow(s, -beta);
    if (std::isfinite(w)) return std::pow(1.0 + w, p - 1.0);
    return std::pow(s, -beta * (p - 1.0));
}

}  // namespace

// ---------------------------------------------------------------------------
// Control geometries

ControlGeometry linear_ball(std::function<Mat(double)> B, double radius, int n, int m) {
    if (radius <= 0.0) throw ConfigError("linear_ball: radius must be positive");
    ControlGeometry geo;
    geo.kind = ControlKind::LinearBall;
    geo.B = std::move(B);
    geo.radius = radius;
    geo.dim_u = m;
    auto Bf = geo.B;
    geo.b = [Bf](double t, const Vec& u) { return mul(Bf(t), u); };
    geo.bound = [Bf, radius](double t0, double t1) {
        double m_ = 0.0;
        for (int i = 0; i <= 32; ++i) {
            const double t = t0 + (t1 - t0) * i / 32.0;
            m_ = std::max(m_, op_norm(Bf(t)));
        }
        return radius * m_;
    };
    (void)n;
    return geo;
}

ControlGeometry linear_ball(const Mat& B, double radius) {
    const double bn = op_norm(B);
    ControlGeometry geo;
    geo.kind = ControlKind::LinearBall;
    geo.radius = radius;
    geo.dim_u = B.cols;
    geo.B = [B](double) { return B; };
    geo.b = [B](double, const Vec& u) { return mul(B, u); };
    geo.bound = [bn, radius](double, double) { return radius * bn; };
    if (radius <= 0.0) throw ConfigError("linear_ball: radius must be positive");
    return geo;
}

ControlGeometry finite_set(std::vector<Vec> values) {
    if (values.empty()) throw ConfigError("finite_set: needs at least one value");
    const size_t m = values.front().size();
    for (const Vec& v : values)
        if (v.size() != m) throw ConfigError("finite_set: inconsistent value dimensions");
    ControlGeometry geo;
    geo.kind = ControlKind::FiniteSet;
    geo.values = std::move(values);
    geo.dim_u = static_cast<int>(m);
    geo.b = [](double, const Vec& u) { return u; };
    double mx = 0.0;
    for (const Vec& v : geo.values) mx = std::max(mx, norm(v));
    geo.bound = [mx](double, double) { return mx; };
    return geo;
}

ControlGeometry no_control(int n) { return finite_set({Vec(static_cast<size_t>(n), 0.0)}); }

// ---------------------------------------------------------------------------
// Drifts

MatrixDrift constant_drift(const Mat& A) {
    MatrixDrift d;
    const double nb = op_norm(A);
    d.A = [A](double) { return A; };
    d.norm_bound = [nb](double, double) { return nb; };
    return d;
}

MatrixDrift rotation_drift(double omega) {
    Mat A(2, 2);
    A(0, 1) = -omega;
    A(1, 0) = omega;
    return constant_drift(A);
}

MatrixDrift zero_drift(int n) { return constant_drift(Mat::zero(n, n)); }

// ---------------------------------------------------------------------------
// Catalog factory

ControlSystem make_catalog_system(GrowthKind kind, double p, double beta,
                                  std::function<double(double)> g, int n,
                                  std::function<Mat(double)> A, ControlGeometry controls,
                                  Vec y0) {
    if (kind == GrowthKind::Custom)
        throw ConfigError("make_catalog_system: kind must be power|logpower|exponential");
    if (!(p > 1.0)) throw ConfigError("catalog growth requires p > 1");
    if (!(beta > 1.0 / (p - 1.0)))
        throw ConfigError("catalog compactifier requires beta > 1/(p-1)");
    reject_nonpositive_coeff(g);
    const double g_lo = coeff_inf(g);

    ControlSystem sys;
    sys.n = n;
    sys.y0 = std::move(y0);
    sys.controls = std::move(controls);

    MatrixDrift drift;
    drift.A = std::move(A);
    {
        // Sampled on [0, 100] with 257 points; exact for the constant and
        // rotation drifts the factory overloads produce.
        auto Af = drift.A;
        drift.norm_bound = [Af](double t0, double t1) {
            double m = 0.0;
            for (int i = 0; i <= 256; ++i)
                m = std::max(m, op_norm(Af(t0 + (t1 - t0) * i / 256.0)));
            return m;
        };
    }
    sys.drift = std::move(drift);

    GrowthModel gm;
    gm.catalog_tag = kind;
    gm.p = p;
    gm.beta = beta;
    gm.coeff = g;

    Compactifier cp;

    switch (kind) {
        case GrowthKind::Power: {
            gm.G = [g, p](double t, double r) { return g(t) * std::pow(r, p); };
            gm.G_r = [g, p](double t, double r) { return g(t) * p * std::pow(r, p - 1.0); };
            cp.phi = [beta](double s) { return std::pow(s, -beta); };
            cp.phi_d1 = [beta](double s) { return -beta * std::pow(s, -beta - 1.0); };
            cp.phi_d2 = [beta](double s) {
                return beta * (beta + 1.0) * std::pow(s, -beta - 2.0);
            };
            cp.Phi = [beta](double r) { return std::pow(r, -1.0 / beta); };
            cp.s0 = 0.5 * std::pow(2.0, -1.0 / beta);
            cp.ratio_phi_d1 = [beta](double s) { return -s / beta; };
            cp.omega = [beta, p, g_lo](double s) {
                if (s <= 0.0) return 0.0;
                const double lhs =
                    1.0 + (beta + 1.0) / beta + beta * std::pow(s, beta - 1.0);
                const double shape =
                    (p - 1.0 - 1.0 / beta) * std::pow(s, -(p - 1.0) * beta);
                return lhs / (g_lo * shape);
            };
            sys.growth_over_phi_d1 = [g, p, beta](double t, double s) {
                return -(g(t) / beta) * std::pow(s, 1.0 - (p - 1.0) * beta);
            };
            sys.growth_over_r_at_phi = [g, p, beta](double t, double s) {
                return g(t) * std::pow(s, -(p - 1.0) * beta);
            };
            sys.growth_r_at_phi = [g, p, beta](double t, double s) {
                return g(t) * p * std::pow(s, -(p - 1.0) * beta);
            };
            break;
        }
        case GrowthKind::LogPower: {
            gm.G = [g, p](double t, double r) {
                return g(t) * r * std::pow(std::log1p(r), p);
            };
            gm.G_r = [g, p](double t, double r) {
                const double L = std::log1p(r);
                return g(t) * std::pow(L, p - 1.0) * (L + p * r / (1.0 + r));
            };
            cp.phi = [beta](double s) { return std::exp(std::pow(s, -beta)); };
            cp.phi_d1 = [beta](double s) {
                return -beta * std::pow(s, -beta - 1.0) * std::exp(std::pow(s, -beta));
            };
            cp.phi_d2 = [beta](double s) {
                const double w = std::pow(s, -beta);
                return beta * std::pow(s, -2.0 * beta - 2.0) *
                       (beta + (beta + 1.0) * std::pow(s, beta)) * std::exp(w);
            };
            cp.Phi = [beta](double r) { return std::pow(std::log(r), -1.0 / beta); };
            cp.s0 = 0.5 * std::pow(std::log(2.0), -1.0 / beta);
            cp.ratio_phi_d1 = [beta](double s) { return -std::pow(s, beta + 1.0) / beta; };
            cp.omega = [beta, p, g_lo](double s) {
                if (s <= 0.0) return 0.0;
                const double w = std::pow(s, -beta);
                const double sb = std::pow(s, beta);
                const double lhs = 1.0 + 1.0 + (beta + 1.0) / beta * sb +
                                   beta * std::pow(s, -beta - 1.0) * std::exp(-w);
                const double L = log1p_phi_logpower(s, beta);
                const double shape = std::pow(L, p - 1.0) *
                                     (p / (1.0 + std::exp(-w)) -
                                      (beta + 1.0) / beta * sb * L);
                if (!(shape > 0.0)) return kInf;
                return lhs / (g_lo * shape);
            };
            sys.growth_over_phi_d1 = [g, p, beta](double t, double s) {
                const double L = log1p_phi_logpower(s, beta);
                return -(g(t) / beta) * std::pow(s, beta + 1.0) * std::pow(L, p);
            };
            sys.growth_over_r_at_phi = [g, p, beta](double t, double s) {
                return g(t) * std::pow(log1p_phi_logpower(s, beta), p);
            };
            sys.growth_r_at_phi = [g, p, beta](double t, double s) {
                const double w = std::pow(s, -beta);
                const double L = log1p_phi_logpower(s, beta);
                return g(t) * std::pow(L, p - 1.0) * (L + p / (1.0 + std::exp(-w)));
            };
            break;
        }
        case GrowthKind::Exponential: {
            gm.G = [g, p](double t, double r) { return g(t) * std::expm1((p - 1.0) * r); };
            gm.G_r = [g, p](double t, double r) {
                return g(t) * (p - 1.0) * std::exp((p - 1.0) * r);
            };
            cp.phi = [beta](double s) {
                const double w = std::pow(s, -beta);
                if (std::isfinite(w)) return std::log1p(w);
                return -beta * std::log(s);
            };
            cp.phi_d1 = [beta](double s) {
                return -beta / (s + std::pow(s, beta + 1.0));
            };
            cp.phi_d2 = [beta](double s) {
                const double d = s + std::pow(s, beta + 1.0);
                return beta * (1.0 + (beta + 1.0) * std::pow(s, beta)) / (d * d);
            };
            cp.Phi = [beta](double r) {
                if (r > 700.0) return std::exp(-r / beta);
                return std::pow(std::expm1(r), -1.0 / beta);
            };
            cp.s0 = 0.5 * std::pow(std::expm1(2.0), -1.0 / beta);
            {
                auto phi = cp.phi;
                cp.ratio_phi_d1 = [phi, beta](double s) {
                    return -phi(s) * (s + std::pow(s, beta + 1.0)) / beta;
                };
            }
            {
                auto phi = cp.phi;
                cp.omega = [phi, beta, p, g_lo](double s) {
                    if (s <= 0.0) return 0.0;
                    const double ph = phi(s), sb = std::pow(s, beta);
                    const double d = s + std::pow(s, beta + 1.0);
                    const double lhs = 1.0 + beta / (d * ph * ph) +
                                       ph * (1.0 + (beta + 1.0) * sb) / beta;
                    const double E = exp_growth_factor(s, beta, p);
                    const double shape =
                        (p - 1.0) * E - (E - 1.0) * (1.0 + (beta + 1.0) * sb) / beta;
                    if (!(shape > 0.0)) return kInf;
                    return lhs / (g_lo * shape);
                };
            }
            sys.growth_over_phi_d1 = [g, p, beta](double t, double s) {
                const double E = exp_growth_factor(s, beta, p);
                return -g(t) * (E - 1.0) * (s + std::pow(s, beta + 1.0)) / beta;
            };
            {
                auto phi = cp.phi;
                sys.growth_over_r_at_phi = [g, p, beta, phi](double t, double s) {
                    return g(t) * (exp_growth_factor(s, beta, p) - 1.0) / phi(s);
                };
            }
            sys.growth_r_at_phi = [g, p, beta](double t, double s) {
                return g(t) * (p - 1.0) * exp_growth_factor(s, beta, p);
            };
            break;
        }
        case GrowthKind::Custom:
            break;  // unreachable
    }

    sys.growth = std::move(gm);
    sys.compactifier = std::move(cp);
    finalize_system(sys);
    return sys;
}

ControlSystem make_catalog_system(GrowthKind kind, double p, double beta,
                                  std::function<double(double)> g, int n, const Mat& A,
                                  ControlGeometry controls, Vec y0) {
    ControlSystem sys = make_catalog_system(kind, p, beta, std::move(g), n,
                                            std::function<Mat(double)>([A](double) { return A; }),
                                            std::move(controls), std::move(y0));
    sys.drift = constant_drift(A);
    return sys;
}

void finalize_system(ControlSystem& sys) {
    if (static_cast<int>(sys.y0.size()) != sys.n)
        throw ConfigError("y0 length does not match the state dimension");
    if (!sys.growth.G) throw ConfigError("growth model missing G");
    if (!sys.growth.G_r) throw ConfigError("growth model missing G_r");
    if (!sys.drift.A) sys.drift = zero_drift(sys.n);
    if (!sys.controls.b) sys.controls = no_control(sys.n);

    if (!sys.growth_over_phi_d1) {
        auto G = sys.growth.G;
        auto phi = sys.compactifier.phi;
        auto phi_d1 = sys.compactifier.phi_d1;
        sys.growth_over_phi_d1 = [G, phi, phi_d1](double t, double s) {
            return G(t, phi(s)) / phi_d1(s);
        };
    }
    if (!sys.growth_over_r_at_phi) {
        auto G = sys.growth.G;
        auto phi = sys.compactifier.phi;
        sys.growth_over_r_at_phi = [G, phi](double t, double s) {
            const double r = phi(s);
            return G(t, r) / r;
        };
    }
    if (!sys.growth_r_at_phi) {
        auto G_r = sys.growth.G_r;
        auto phi = sys.compactifier.phi;
        sys.growth_r_at_phi = [G_r, phi](double t, double s) { return G_r(t, phi(s)); };
    }
    if (!sys.compactifier.ratio_phi_d1 && sys.compactifier.phi) {
        auto phi = sys.compactifier.phi;
        auto phi_d1 = sys.compactifier.phi_d1;
        sys.compactifier.ratio_phi_d1 = [phi, phi_d1](double s) { return phi(s) / phi_d1(s); };
    }

    // Everything must be evaluable at t = 0.
    (void)sys.growth.G(0.0, 0.0);
    (void)sys.drift.A(0.0);
    if (!sys.controls.values.empty()) (void)sys.controls.b(0.0, sys.controls.values.front());
}

// ---------------------------------------------------------------------------
// Right-hand side

Vec evaluate_rhs(const ControlSystem& sys, double t, const Vec& y, const Vec& u) {
    Vec f = mul(sys.drift.A(t), y);
    const Vec bu = sys.controls.b(t, u);
    for (size_t i = 0; i < f.size(); ++i) f[i] += bu[i];
    const double r = norm(y);
    if (r > 0.0) {
        const double ratio = sys.growth.G(t, r) / r;
        axpy(f, ratio, y);
    }
    for (size_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i]))
            throw EvaluationFailure("evaluate_rhs: non-finite component " +
                                    std::to_string(i) + " at t=" + std::to_string(t));
    return f;
}

// ---------------------------------------------------------------------------
// Control laws

ControlLaw ControlLaw::constant(Vec u) {
    ControlLaw law;
    law.kind = Kind::PiecewiseConstant;
    law.breakpoints = {0.0};
    law.values = {std::move(u)};
    return law;
}

ControlLaw ControlLaw::piecewise(std::vector<double> breakpoints, std::vector<Vec> values) {
    if (breakpoints.empty() || breakpoints.size() != values.size())
        throw ConfigError("piecewise law: breakpoints/values size mismatch");
    for (size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw ConfigError("piecewise law: breakpoints must be strictly increasing");
    ControlLaw law;
    law.kind = Kind::PiecewiseConstant;
    law.breakpoints = std::move(breakpoints);
    law.values = std::move(values);
    return law;
}

ControlLaw ControlLaw::costate_feedback(std::function<Vec(double, const Vec&)> f) {
    ControlLaw law;
    law.kind = Kind::Feedback;
    law.feedback = std::move(f);
    return law;
}

const Vec& ControlLaw::value_at(double t) const {
    if (kind != Kind::PiecewiseConstant)
        throw PreconditionError("control law is not open-loop evaluable");
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    size_t idx = (it == breakpoints.begin()) ? 0 : static_cast<size_t>(it - breakpoints.begin()) - 1;
    return values[idx];
}

double ControlLaw::next_breakpoint_after(double t) const {
    if (kind != Kind::PiecewiseConstant) return kInf;
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    return (it == breakpoints.end()) ? kInf : *it;
}

// ---------------------------------------------------------------------------
// Chart conversions

Vec compact_state(const ControlSystem& sys, const Vec& y) {
    const double r = norm(y);
    const double s = sys.compactifier.Phi(r);
    return scaled(y, s / r);
}

Vec outer_state(const ControlSystem& sys, const Trajectory::Sample& sample) {
    if (sample.chart == Chart::Outer) return sample.state;
    const double s = norm(sample.state);
    const double r = sys.compactifier.phi(s);
    return scaled(sample.state, r / s);
}

double outer_radius(const ControlSystem& sys, const Trajectory::Sample& sample) {
    if (sample.chart == Chart::Outer) return norm(sample.state);
    return sys.compactifier.phi(norm(sample.state));
}

// ---------------------------------------------------------------------------
// Assumption report lookup

const AssumptionCheck* AssumptionReport::find(const std::string& id) const {
    for (const auto& c : checks)
        if (c.id == id) return &c;
    return nullptr;
}

bool AssumptionReport::passed(const std::string& id) const {
    const AssumptionCheck* c = find(id);
    return c != nullptr && c->status == CheckStatus::Pass;
}

}  // namespace blowup
