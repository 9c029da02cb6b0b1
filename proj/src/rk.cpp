#include "blowup/rk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blowup/errors.hpp"

namespace blowup {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

void check_finite(const Vec& f, double t) {
    for (size_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i]))
            throw EvaluationFailure("non-finite rhs component " + std::to_string(i) +
                                    " at t=" + std::to_string(t));
}

}  // namespace

double initial_step(const Field& field, double t0, const Vec& y0, double direction,
                    const StepperOptions& opts) {
    Vec f0(y0.size());
    field(t0, y0, f0);
    check_finite(f0, t0);
    double dn = 0.0, yn = 0.0;
    for (size_t i = 0; i < y0.size(); ++i) {
        const double sc = opts.abs_tol + opts.rel_tol * std::abs(y0[i]);
        dn += (f0[i] / sc) * (f0[i] / sc);
        yn += (y0[i] / sc) * (y0[i] / sc);
    }
    double h = (dn > 0.0 && yn > 0.0) ? 0.01 * std::sqrt(yn / dn) : 1e-6;
    h = std::clamp(h, 1e-12, 1e3);
    if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
    return direction * h;
}

DriveResult drive(const Field& field, double t0, const Vec& y0, double t_end,
                  const StepperOptions& opts, const StepCallback& on_step) {
    const size_t n = y0.size();
    const double dir = (t_end >= t0) ? 1.0 : -1.0;

    DriveResult res;
    res.t_end = t0;
    res.y_end = y0;
    if (t_end == t0) return res;

    Vec y = y0, f0(n), k2(n), k3(n), k4(n), k5(n), k6(n), f1(n), ytmp(n), ynew(n);
    field(t0, y, f0);
    check_finite(f0, t0);

    double t = t0;
    double h = initial_step(field, t0, y0, dir, opts);
    if (std::abs(h) > std::abs(t_end - t0)) h = t_end - t0;

    const double t_resolution = 4.0 * std::numeric_limits<double>::epsilon() *
                                std::max(std::abs(t0), std::abs(t_end));
    long steps = 0;
    int rejects_in_a_row = 0;
    while (dir * (t_end - t) > 0.0) {
        if (++steps > opts.max_steps)
            throw StepFailure("max step count exceeded at t=" + std::to_string(t));
        if (dir * (t_end - t) <= t_resolution) break;  // done within time resolution
        if ((opts.min_step > 0.0 && std::abs(h) < opts.min_step) || t + h == t)
            throw StepFailure("step size underflow at t=" + std::to_string(t));
        if (dir * (t + h - t_end) > 0.0) h = t_end - t;

        ytmp = y;
        axpy(ytmp, h * a21, f0);
        field(t + c2 * h, ytmp, k2);

        ytmp = y;
        axpy(ytmp, h * a31, f0);
        axpy(ytmp, h * a32, k2);
        field(t + c3 * h, ytmp, k3);

        ytmp = y;
        axpy(ytmp, h * a41, f0);
        axpy(ytmp, h * a42, k2);
        axpy(ytmp, h * a43, k3);
        field(t + c4 * h, ytmp, k4);

        ytmp = y;
        axpy(ytmp, h * a51, f0);
        axpy(ytmp, h * a52, k2);
        axpy(ytmp, h * a53, k3);
        axpy(ytmp, h * a54, k4);
        field(t + c5 * h, ytmp, k5);

        ytmp = y;
        axpy(ytmp, h * a61, f0);
        axpy(ytmp, h * a62, k2);
        axpy(ytmp, h * a63, k3);
        axpy(ytmp, h * a64, k4);
        axpy(ytmp, h * a65, k5);
        field(t + h, ytmp, k6);

        ynew = y;
        axpy(ynew, h * b1, f0);
        axpy(ynew, h * b3, k3);
        axpy(ynew, h * b4, k4);
        axpy(ynew, h * b5, k5);
        axpy(ynew, h * b6, k6);
        field(t + h, ynew, f1);  // FSAL stage, doubles as error stage k7

        bool finite = all_finite(ynew) && all_finite(f1);
        double err = 0.0;
        if (finite) {
            for (size_t i = 0; i < n; ++i) {
                const double e = h * (e1 * f0[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                      e6 * k6[i] + e7 * f1[i]);
                const double sc =
                    opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                err += (e / sc) * (e / sc);
            }
            err = std::sqrt(err / static_cast<double>(n));
        }

        if (!finite || err > 1.0) {
            const double shrink =
                finite ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
            h *= shrink;
            if (++rejects_in_a_row > 60)
                throw StepFailure("persistent step rejection at t=" + std::to_string(t));
            continue;
        }
        rejects_in_a_row = 0;

        const double t1 = t + h;
        if (on_step) {
            if (on_step(t, y, f0, t1, ynew, f1) == StepOutcome::Stop) {
                res.stopped_by_callback = true;
                res.t_end = t1;
                res.y_end = ynew;
                res.n_steps = steps;
                return res;
            }
        }

        t = t1;
        y = ynew;
        f0 = f1;

        double grow = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
        if (opts.max_step > 0.0 && std::abs(h) > opts.max_step) h = dir * opts.max_step;
    }

    res.t_end = t;
    res.y_end = y;
    res.n_steps = steps;
    return res;
}

Vec integrate_to(const Field& field, double t0, const Vec& y0, double t_end,
                 const StepperOptions& opts) {
    return drive(field, t0, y0, t_end, opts, nullptr).y_end;
}

Vec hermite(double t, double t0, const Vec& y0, const Vec& f0, double t1, const Vec& y1,
            const Vec& f1) {
    const double h = t1 - t0;
    if (h == 0.0) return y0;
    const double s = (t - t0) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    Vec out(y0.size());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i];
    return out;
}

double hermite1(double t, double t0, double y0, double f0, double t1, double y1, double f1) {
    const double h = t1 - t0;
    if (h == 0.0) return y0;
    const double s = (t - t0) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    return h00 * y0 + h * h10 * f0 + h01 * y1 + h * h11 * f1;
}

}  // namespace blowup
