#ifndef BLOWUP_MONOTONE_HPP
#define BLOWUP_MONOTONE_HPP

#include <cstdint>
#include <functional>
#include <string>

#include "blowup/core.hpp"
#include "blowup/growth.hpp"

// The comparison gap
//   Phi(|y_hat|) - Phi(|y_tilde|) - |y_hat/|y_hat| - y_tilde/|y_tilde||
// and its monotonicity certification along pairs of solutions of
//   dy/dt = G(t,|y|) y/|y| + A(t) y + g(t)
// sharing a bounded drift g.

namespace blowup {

struct GapSample {
    double t = 0.0;
    double X = 0.0;           // Phi(|y_hat|) - Phi(|y_tilde|)
    double Theta_norm = 0.0;  // |theta_hat - theta_tilde|
    double gap = 0.0;         // X - Theta_norm
};

// Timeless gap of two states. Throws PreconditionError when either radius is
// below the chart domain of Phi.
GapSample gap(const ControlSystem& sys, const Vec& y_hat, const Vec& y_tilde);

struct MonotoneOptions {
    int grid_points = 200;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double slack_scale = 1e-9;  // pass iff min increment >= -slack_scale*(1+|gap|)
};

struct MonotoneResult {
    enum class Status { Pass, Fail, PreconditionViolation };
    Status status = Status::PreconditionViolation;
    double min_increment = 0.0;
    double max_abs_gap = 0.0;
    double gap_start = 0.0, gap_end = 0.0;
    bool reran_fine = false;  // a fail was re-checked at 4x resolution
    std::string detail;
};

MonotoneResult certify_monotone(const ControlSystem& sys,
                                const std::function<Vec(double)>& drift, const Vec& y_hat0,
                                const Vec& y_tilde0, double t0, double T,
                                const ThresholdBundle& bundle,
                                const MonotoneOptions& opts = {});

// The sampled gap curve itself (uniform grid on [t0, T]).
std::vector<GapSample> gap_series(const ControlSystem& sys,
                                  const std::function<Vec(double)>& drift, const Vec& y_hat0,
                                  const Vec& y_tilde0, double t0, double T,
                                  const ThresholdBundle& bundle,
                                  const MonotoneOptions& opts = {});

// Randomized hypothesis-satisfying instance: drift piecewise constant with
// |drift| <= M, radii above rho, angle small enough that the initial gap is
// positive with >= 10% margin, interval 80% of the earlier blowup.
struct MonotoneInstance {
    uint64_t seed = 0;
    Vec y_hat0, y_tilde0;
    std::function<Vec(double)> drift;
    std::vector<double> drift_breaks;
    std::vector<Vec> drift_values;
    double t0 = 0.0, T = 0.0;
};

MonotoneInstance random_instance(const ControlSystem& sys, const ThresholdBundle& bundle,
                                 uint64_t seed);

}  // namespace blowup

#endif
