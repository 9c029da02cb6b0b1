#ifndef BLOWUP_RK_HPP
#define BLOWUP_RK_HPP

#include <functional>

#include "blowup/linalg.hpp"

// Embedded Dormand-Prince 5(4) with FSAL, mixed absolute/relative error
// control and cubic Hermite interpolation between accepted steps.

namespace blowup {

using Field = std::function<void(double t, const Vec& y, Vec& dy)>;

struct StepperOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.0;  // 0 => unbounded
    double min_step = 0.0;  // 0 => 16*eps*max(|t|,1)
    long max_steps = 2'000'000;
};

enum class StepOutcome { Continue, Stop };

// Called after every accepted step with the step endpoints and the field
// values there (f1 is the FSAL derivative, exact at (t1, y1)).
using StepCallback = std::function<StepOutcome(double t0, const Vec& y0, const Vec& f0,
                                               double t1, const Vec& y1, const Vec& f1)>;

struct DriveResult {
    double t_end = 0.0;
    Vec y_end;
    long n_steps = 0;
    bool stopped_by_callback = false;
};

// Integrate field from (t0, y0) to t_end (t_end < t0 integrates backward).
// Throws StepFailure on step underflow, EvaluationFailure on non-finite RHS.
DriveResult drive(const Field& field, double t0, const Vec& y0, double t_end,
                  const StepperOptions& opts, const StepCallback& on_step);

// Convenience: endpoint only.
Vec integrate_to(const Field& field, double t0, const Vec& y0, double t_end,
                 const StepperOptions& opts);

// Cubic Hermite interpolation of a step (t0,y0,f0) -> (t1,y1,f1) at t.
Vec hermite(double t, double t0, const Vec& y0, const Vec& f0, double t1, const Vec& y1,
            const Vec& f1);

// Scalar variant for event localization.
double hermite1(double t, double t0, double y0, double f0, double t1, double y1, double f1);

double initial_step(const Field& field, double t0, const Vec& y0, double direction,
                    const StepperOptions& opts);

}  // namespace blowup

#endif
