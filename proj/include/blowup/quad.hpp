#ifndef BLOWUP_QUAD_HPP
#define BLOWUP_QUAD_HPP

#include <functional>

namespace blowup {

struct QuadResult {
    double value = 0.0;
    bool converged = false;
    bool diverged = false;  // integral certified non-finite (cap or non-decaying tail)
};

// Adaptive Simpson on [a, b] with absolute tolerance.
QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                            double abs_tol = 1e-10, int max_depth = 48);

// Improper tail integral \int_R^inf f(r) dr via the substitution r = 1/s:
// adaptive Simpson over dyadic blocks [b 2^-k-1, b 2^-k] toward s = 0, with a
// geometric extrapolation of the remaining tail. Divergence is declared when
// partial sums exceed divergence_cap or the block values stop decaying.
QuadResult tail_integral(const std::function<double(double)>& f, double R,
                         double abs_tol = 1e-10, double divergence_cap = 1e6);

}  // namespace blowup

#endif
