#include "blowup/quad.hpp"

#include <cmath>
#include <limits>

namespace blowup {

namespace {

struct SimpsonState {
    const std::function<double(double)>* f;
    double cap;
    double accumulated = 0.0;
    bool diverged = false;
    bool depth_exhausted = false;
};

double simpson_rec(SimpsonState& st, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth) {
    if (st.diverged) return 0.0;
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = (*st.f)(lm), frm = (*st.f)(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0) {
        st.depth_exhausted = true;
        return left + right + delta / 15.0;
    }
    if (std::abs(delta) <= 15.0 * tol) {
        const double v = left + right + delta / 15.0;
        st.accumulated += std::abs(v);
        if (st.accumulated > st.cap) st.diverged = true;
        return v;
    }
    return simpson_rec(st, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(st, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

QuadResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                            double abs_tol, int max_depth) {
    QuadResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    SimpsonState st{&f, std::numeric_limits<double>::infinity()};
    const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
        res.converged = false;
        res.value = std::numeric_limits<double>::infinity();
        return res;
    }
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    res.value = simpson_rec(st, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
    res.converged = !st.depth_exhausted && std::isfinite(res.value);
    return res;
}

QuadResult tail_integral(const std::function<double(double)>& f, double R, double abs_tol,
                         double divergence_cap) {
    QuadResult res;
    if (R <= 0.0) return res;
    auto g = [&](double s) {
        const double v = f(1.0 / s);
        if (!std::isfinite(v) || !(s > 0.0)) return divergence_cap;
        return v / (s * s);
    };

    const double b = 1.0 / R;
    double sum = 0.0;
    double prev_block = std::numeric_limits<double>::infinity();
    double block = 0.0, ratio = 0.0;
    const int max_blocks = 56;
    for (int k = 0; k < max_blocks; ++k) {
        const double hi = b * std::pow(0.5, k), lo = 0.5 * hi;
        const QuadResult piece = adaptive_simpson(g, lo, hi, abs_tol * std::pow(0.5, k), 32);
        if (!piece.converged) {
            res.value = sum;
            res.diverged = true;  // a block refused to settle: singular mass
            return res;
        }
        block = piece.value;
        sum += block;
        if (sum > divergence_cap) {
            res.value = sum;
            res.diverged = true;
            return res;
        }
        ratio = std::isfinite(prev_block) && std::abs(prev_block) > 0.0
                    ? std::abs(block) / std::abs(prev_block)
                    : 0.0;
        if (k > 4 && std::abs(block) <= abs_tol) break;
        if (k > 4 && ratio >= 0.95) {
            // Blocks not decaying toward s = 0: non-integrable tail.
            res.value = sum;
            res.diverged = true;
            return res;
        }
        prev_block = block;
    }
    // Geometric extrapolation of the remaining (decaying) blocks.
    if (ratio > 0.0 && ratio < 1.0) sum += block * ratio / (1.0 - ratio);
    res.value = sum;
    res.converged = std::isfinite(sum);
    return res;
}

}  // namespace blowup
