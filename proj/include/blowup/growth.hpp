#ifndef BLOWUP_GROWTH_HPP
#define BLOWUP_GROWTH_HPP

#include <json.hpp>

#include "blowup/core.hpp"

// Growth-model analytics: the threshold quantities
//   Omega_T(rho) = inf_{t in [0,T], r >= rho} G(t,r)/r,
//   omega0(s) = sup_{s~ < s} 1/phi(s~),  omega1(s) = sup_{s~ < s} phi(s~)/|phi'(s~)|,
//   Omega~(rho) = inf_{t, r >= rho} (G_r - G phi''(Phi(r))/phi'(Phi(r))^2),
// the rho-threshold search, and the runtime assumption audit.

namespace blowup {

struct ThresholdBundle {
    double rho = 0.0;
    double M = 0.0;
    double Omega_T = 0.0;
    double omega0 = 0.0;
    double omega1 = 0.0;
    double omega_val = 0.0;
    double Omega_tilde = 0.0;
    double horizon = 0.0;
    bool monotone_caveat = false;  // ratio not verified monotone beyond the r cap
};

struct OmegaTResult {
    double value = 0.0;
    // True when G(t,r)/r keeps growing toward the cap (superlinear evidence);
    // false means the infimum beyond r_max is unverified.
    bool superlinear = false;
};

// Lower estimate of Omega_T(rho) on [0,T] x [rho, r_max] grids.
OmegaTResult omega_T(const ControlSystem& sys, double T, double rho, double r_max = 1e8,
                     int grid = 400);

struct RhoSearchOptions {
    double rho_max = 1e18;
    int grid = 400;          // geometric rho grid
    int refine = 64;         // refinement points inside the first passing step
    double r_cap_factor = 1e4;  // inf over r computed on [rho, max(r_cap_factor*rho, 1e8)]
    int t_grid = 33;
};

// Smallest grid-found rho satisfying the six (3.12) conditions for bound M.
// Throws NotSatisfiableError with the first failing condition at rho_max.
ThresholdBundle rho_threshold(const ControlSystem& sys, double T, double M,
                              const RhoSearchOptions& opts = {});

// Per-assumption audit of (P1)-(P5), (S1)-(S5), (S5'), (S5'').
// Failures are report entries, never faults.
AssumptionReport audit(const ControlSystem& sys, double T);

nlohmann::json report_json(const AssumptionReport& rep);

// Cumulative integral of (|y| G_r(t,|y|) - G(t,|y|))/|y| along a trajectory,
// the exponent g(t) weighting the transversality products.
class GrowthExponent {
  public:
    double operator()(double t) const;  // throws PreconditionError outside range
    double t_front() const { return ts_.front(); }
    double t_back() const { return ts_.back(); }

  private:
    friend GrowthExponent growth_exponent_integral(const Trajectory&, const ControlSystem&);
    std::vector<double> ts_, gs_;       // cumulative values at sample times
    std::vector<double> mids_, midval_; // integrand at interval midpoints
    std::vector<double> ends_;          // integrand at sample times
};

GrowthExponent growth_exponent_integral(const Trajectory& traj, const ControlSystem& sys);

}  // namespace blowup

#endif
