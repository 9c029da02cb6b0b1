#ifndef BLOWUP_CORE_HPP
#define BLOWUP_CORE_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/linalg.hpp"

// Domain types for controlled systems of the form
//     dy/dt = G(t,|y|) y/|y| + A(t) y + b(t,u),
// their compactified charts, realizable control laws, and the records the
// certification machinery produces. All types are immutable after
// construction; function fields must be reentrant.

namespace blowup {

enum class GrowthKind { Power, LogPower, Exponential, Custom };

struct GrowthModel {
    std::function<double(double, double)> G;    // (t, r) -> growth rate
    std::function<double(double, double)> G_r;  // dG/dr
    GrowthKind catalog_tag = GrowthKind::Custom;
    double p = 0.0;     // catalog exponent (valid when catalog_tag != Custom)
    double beta = 0.0;  // matched compactifier exponent
    std::function<double(double)> coeff;  // positive coefficient g(t), catalog kinds
};

struct Compactifier {
    std::function<double(double)> phi;     // s in (0, s0) -> radius > 2
    std::function<double(double)> phi_d1;  // phi' < 0
    std::function<double(double)> phi_d2;
    std::function<double(double)> Phi;    // inverse: radius -> s
    double s0 = 0.0;
    std::function<double(double)> omega;  // (S3) modulus bound

    // phi(s)/phi'(s), stable where phi overflows (catalog closed forms).
    std::function<double(double)> ratio_phi_d1;
};

struct MatrixDrift {
    std::function<Mat(double)> A;
    // sup of the operator norm of A over [t0, t1]; must dominate any sampled max.
    std::function<double(double, double)> norm_bound;
};

enum class ControlKind { LinearBall, FiniteSet, CustomConvex };

// Result of maximizing <psi, b(t,u)> over U.
struct SupportPoint {
    Vec u;
    double value = 0.0;
    bool degenerate = false;
};

struct ControlGeometry {
    ControlKind kind = ControlKind::FiniteSet;
    std::function<Vec(double, const Vec&)> b;     // (t, u) -> drift vector in R^n
    std::function<double(double, double)> bound;  // sup_u |b(t,u)| over [t0, t1]
    int dim_u = 0;

    // LinearBall: b(t,u) = B(t) u with |u| <= radius.
    std::function<Mat(double)> B;
    double radius = 0.0;

    // FiniteSet: the admissible u-values.
    std::vector<Vec> values;

    // CustomConvex: caller-supplied support maximizer.
    std::function<SupportPoint(double, const Vec&)> support;
};

ControlGeometry linear_ball(std::function<Mat(double)> B, double radius, int n, int m);
ControlGeometry linear_ball(const Mat& B, double radius);
ControlGeometry finite_set(std::vector<Vec> values);  // b(t,u) = u, values in R^n
ControlGeometry no_control(int n);                    // singleton {0}

// (P5) lower bound: G - ||A||r - sup|b| >= zeta(r) on [R0, inf), 1/zeta integrable.
struct BlowupLowerBound {
    std::function<double(double)> zeta;
    double R0 = 0.0;
};

struct ControlSystem {
    int n = 0;
    GrowthModel growth;
    Compactifier compactifier;
    MatrixDrift drift;
    ControlGeometry controls;
    std::optional<BlowupLowerBound> zeta;
    Vec y0;

    // Stable compositions at r = phi(s). Catalog constructors install closed
    // forms (phi can overflow while these stay representable); custom systems
    // get naive compositions from finalize_compositions.
    std::function<double(double, double)> growth_over_phi_d1;   // G(t,phi(s))/phi'(s)
    std::function<double(double, double)> growth_over_r_at_phi; // G(t,phi(s))/phi(s)
    std::function<double(double, double)> growth_r_at_phi;      // G_r(t,phi(s))

    // Optional Jacobian of the autonomous field f(y,u) for AdjointMode::AutonomousFull.
    std::function<Mat(const Vec& y, const Vec& u)> f_jacobian;
};

// Fill any unset composition fields from growth/compactifier and validate the
// basic shape invariants (y0 length, evaluability at t=0).
void finalize_system(ControlSystem& sys);

// Catalog factory for the three growth families:
//   power:        G = g(t) r^p            phi(s) = s^-beta
//   logpower:     G = g(t) r ln^p(1+r)    phi(s) = exp(s^-beta)
//   exponential:  G = g(t)(e^{(p-1)r}-1)  phi(s) = ln(1+s^-beta)
// Requires p > 1 and beta > 1/(p-1); s0 is half the largest s with phi(s)=2.
ControlSystem make_catalog_system(GrowthKind kind, double p, double beta,
                                  std::function<double(double)> g, int n,
                                  std::function<Mat(double)> A, ControlGeometry controls,
                                  Vec y0);

// Convenience overload with constant drift matrix.
ControlSystem make_catalog_system(GrowthKind kind, double p, double beta,
                                  std::function<double(double)> g, int n, const Mat& A,
                                  ControlGeometry controls, Vec y0);

MatrixDrift constant_drift(const Mat& A);
MatrixDrift rotation_drift(double omega);  // n=2: [[0,-w],[w,0]]
MatrixDrift zero_drift(int n);

// Full system right-hand side; the radial term is 0 at y = 0.
// Throws EvaluationFailure naming the offending component if non-finite.
Vec evaluate_rhs(const ControlSystem& sys, double t, const Vec& y, const Vec& u);

// ---------------------------------------------------------------------------
// Control laws

struct ControlLaw {
    enum class Kind { PiecewiseConstant, Feedback };
    Kind kind = Kind::PiecewiseConstant;

    // PiecewiseConstant: u(t) = values[j] on [breakpoints[j], breakpoints[j+1]).
    std::vector<double> breakpoints;
    std::vector<Vec> values;

    // Feedback: costate closure u = F(t, psi). Not open-loop evaluable.
    std::function<Vec(double, const Vec&)> feedback;

    static ControlLaw constant(Vec u);
    static ControlLaw piecewise(std::vector<double> breakpoints, std::vector<Vec> values);
    static ControlLaw costate_feedback(std::function<Vec(double, const Vec&)> f);

    const Vec& value_at(double t) const;  // PiecewiseConstant only
    // First breakpoint strictly after t, or +inf.
    double next_breakpoint_after(double t) const;
};

// ---------------------------------------------------------------------------
// Trajectories and costates

enum class Chart { Outer, Compact };

struct BlowupEstimate {
    double T_hat = 0.0;
    double err = 0.0;
};

struct Trajectory {
    struct Sample {
        double t = 0.0;
        Vec state;  // y (Outer) or x = Phi(|y|) y/|y| (Compact)
        Chart chart = Chart::Outer;
        Vec u;  // control applied on the interval starting here
        // Co-integrated cumulative (|y|G_r - G)/|y| (the growth exponent);
        // NaN when the trajectory was not produced by the integrator.
        double g_exp = std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<Sample> samples;
    std::optional<BlowupEstimate> blowup;
    double switch_radius = 0.0;
    double eps_blow = 0.0;
    long n_steps = 0;
    int n_switches = 0;

    double t_front() const { return samples.front().t; }
    double t_back() const { return samples.back().t; }
};

// Chart conversions. outer_state returns y for any sample.
Vec outer_state(const ControlSystem& sys, const Trajectory::Sample& s);
Vec compact_state(const ControlSystem& sys, const Vec& y);
double outer_radius(const ControlSystem& sys, const Trajectory::Sample& s);

struct CostatePath {
    struct Sample {
        double t = 0.0;
        Vec psi;
    };
    std::vector<Sample> samples;
    double t_ref = 0.0;
    double normalization = 1.0;  // |psi(t_ref)|

    double t_front() const { return samples.front().t; }
    double t_back() const { return samples.back().t; }
};

// ---------------------------------------------------------------------------
// Certification records

enum class CheckStatus { Pass, Fail, NotCheckable };

struct AssumptionCheck {
    std::string id;  // P1..P5, S1..S5, S5', S5''
    CheckStatus status = CheckStatus::NotCheckable;
    struct Witness {
        double t = 0.0;
        double r = 0.0;
        double value = 0.0;
        std::string note;
    } witness;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;

    const AssumptionCheck* find(const std::string& id) const;
    bool passed(const std::string& id) const;
};

enum class Mode { TI, TS };

struct PMPReport {
    Mode mode = Mode::TI;
    double hamiltonian_gap = 0.0;
    std::vector<std::pair<double, double>> costate_tail;    // (t_k, |psi(t_k)|)
    std::vector<std::pair<double, double>> sign_inner;      // (t, <psi, y>)
    std::vector<std::pair<double, double>> weighted_inner;  // (t, e^{g(t)} <psi, y>)
    std::vector<std::pair<double, double>> degenerate_windows;

    struct Verdicts {
        bool h_max = false;
        bool tail_decay = false;       // |psi(t_k)| strictly decreasing
        bool tail_small = false;       // |psi(t_10)| <= 1e-3 |psi(t_1)|
        bool sign = false;             // mode-appropriate sign at every sample
        bool sign_weak = false;        // TS (S5'') weak form <= 0
        bool weighted_monotone = false;
    } verdicts;

    // Start of the largest trailing window on which the sign condition holds
    // (Thm 3.2's delta is existential; we report the window instead).
    double sign_window_start = 0.0;
    bool tail_applicable = false;
    long n_samples = 0;
    long n_degenerate = 0;
};

}  // namespace blowup

#endif
