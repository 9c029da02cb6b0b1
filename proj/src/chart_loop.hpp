#ifndef BLOWUP_SRC_CHART_LOOP_HPP
#define BLOWUP_SRC_CHART_LOOP_HPP

#include <functional>

#include "blowup/core.hpp"

// Internal chart-switching integration loop shared by dynamics::integrate and
// pmp::shoot. The state is the chart state (n components), optionally stacked
// with the costate (n more) for coupled extremal runs.

namespace blowup::detail {

struct ChartLoopConfig {
    const ControlSystem* sys = nullptr;
    const ControlLaw* law = nullptr;  // open-loop control, or
    std::function<Vec(double, const Vec&)> feedback;  // u = F(t, psi), needs costate
    bool with_costate = false;
    double rel_tol = 1e-10, abs_tol = 1e-12;
    double switch_radius = 0.0;  // resolved, may be +inf
    double eps_blow = 0.0;
    double t_max = 0.0;
    long max_steps = 0;
};

struct ChartLoopStart {
    double t = 0.0;
    Chart chart = Chart::Outer;
    Vec state;
    Vec psi;  // with_costate only
};

struct ChartLoopResult {
    Trajectory traj;
    std::vector<CostatePath::Sample> costate;
    bool blew_up = false;
    double T_hat = 0.0;
    // Last Outer->Compact switch (or a compact start): restart anchor for the
    // eps-refinement reruns.
    bool have_anchor = false;
    double anchor_t = 0.0;
    Vec anchor_x;
    Vec anchor_psi;
    long n_steps = 0;
    int n_switches = 0;
};

ChartLoopResult run_chart_loop(const ChartLoopConfig& cfg, const ChartLoopStart& start,
                               bool record);

// dpsi = -(a psi + c <theta,psi> theta + A^T psi) with a = G/r, c = G_r - G/r,
// taken from the stable composites in the compact chart. z is the chart state.
void adjoint_accumulate(const ControlSystem& sys, double t, Chart chart, const Vec& z,
                        const Vec& psi, Vec& dpsi);

}  // namespace blowup::detail

#endif
