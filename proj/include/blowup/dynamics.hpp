#ifndef BLOWUP_DYNAMICS_HPP
#define BLOWUP_DYNAMICS_HPP

#include <iosfwd>
#include <utility>

#include <json.hpp>

#include "blowup/core.hpp"

// Forward integration with chart switching. In the outer chart the state is y;
// once |y| >= switch_radius the state becomes x = Phi(|y|) y/|y| and blowup is
// the reachable event |x| <= eps_blow.

namespace blowup {

struct IntegrateOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double switch_radius = 0.0;  // 0 => max(2*rho_hint, 10|y0|) if rho_hint, else 1e3
    double eps_blow = 0.0;       // 0 => 1e-6 * s0
    double t_max = 10.0;
    long max_steps = 2'000'000;
    double rho_hint = 0.0;  // rho of an active ThresholdBundle, if any
};

Trajectory integrate(const ControlSystem& sys, const ControlLaw& law,
                     const IntegrateOptions& opts);

// Refines the blowup estimate by repeating the compact-chart tail with
// eps_blow/4 and eps_blow/16 and Richardson-extrapolating.
// Throws NoBlowupError when integrate reaches t_max.
std::pair<double, double> blowup_time(const ControlSystem& sys, const ControlLaw& law,
                                      const IntegrateOptions& opts);

struct ChatterResult {
    std::vector<std::pair<double, double>> by_period;  // (h, T(h))
    double T_avg = 0.0;
};

// Blowup times of the laws chattering between u_a (fraction lambda) and u_b
// (fraction 1-lambda) per period h, against the lambda-averaged constant
// drift. The pattern within a period is symmetric (u_a, u_b, u_a halves).
ChatterResult chatter_convergence(const ControlSystem& sys, const Vec& u_a, const Vec& u_b,
                                  double lambda, const std::vector<double>& periods,
                                  const IntegrateOptions& opts);

// Raw chart fields (no finiteness checks; the stepper rejects bad steps).
Vec outer_field(const ControlSystem& sys, double t, const Vec& y, const Vec& u);
Vec compact_field(const ControlSystem& sys, double t, const Vec& x, const Vec& u);

// Radius/angle decomposition of an interpolated trajectory point.
struct RadialPoint {
    Chart chart = Chart::Outer;
    double rad = 0.0;  // |y| (Outer) or s = |x| (Compact)
    Vec theta;         // y/|y| = x/|x|
};

// Dense output over a stored trajectory: cubic Hermite per step, with slopes
// recomputed from the chart field and the per-interval control.
class TrajectoryView {
  public:
    TrajectoryView(const ControlSystem& sys, const Trajectory& traj);

    Vec y(double t) const;          // outer-chart state
    double radius(double t) const;  // |y|, stable in the compact chart
    RadialPoint radial(double t) const;
    const Vec& control(double t) const;

    double t_front() const;
    double t_back() const;

  private:
    size_t interval_index(double t) const;
    const ControlSystem* sys_;
    const Trajectory* traj_;
};

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in, const ControlSystem& sys);
nlohmann::json trajectory_summary(const Trajectory& traj);

IntegrateOptions resolve_defaults(const ControlSystem& sys, IntegrateOptions opts);

}  // namespace blowup

#endif
