#ifndef BLOWUP_LINALG_HPP
#define BLOWUP_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

// Small dense vectors/matrices. The systems of interest have n <= ~8, so a
// flat row-major matrix and free functions are all we need.

namespace blowup {

using Vec = std::vector<double>;

struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Mat zero(int r, int c) { return Mat(r, c); }
    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

inline Vec scaled(const Vec& x, double c) {
    Vec r(x);
    for (double& v : r) v *= c;
    return r;
}

inline Vec add(const Vec& x, const Vec& y) {
    Vec r(x);
    for (size_t i = 0; i < r.size(); ++i) r[i] += y[i];
    return r;
}

inline Vec sub(const Vec& x, const Vec& y) {
    Vec r(x);
    for (size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    return r;
}

// r += c*x
inline void axpy(Vec& r, double c, const Vec& x) {
    for (size_t i = 0; i < r.size(); ++i) r[i] += c * x[i];
}

inline Vec mul(const Mat& m, const Vec& x) {
    Vec r(static_cast<size_t>(m.rows), 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
        r[i] = s;
    }
    return r;
}

// m^T x
inline Vec mul_t(const Mat& m, const Vec& x) {
    Vec r(static_cast<size_t>(m.cols), 0.0);
    for (int j = 0; j < m.cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < m.rows; ++i) s += m(i, j) * x[i];
        r[j] = s;
    }
    return r;
}

inline Mat transpose(const Mat& m) {
    Mat r(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) r(j, i) = m(i, j);
    return r;
}

inline Mat matmul(const Mat& x, const Mat& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matmul: shape mismatch");
    Mat r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double v = x(i, k);
            for (int j = 0; j < y.cols; ++j) r(i, j) += v * y(k, j);
        }
    return r;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi. Good enough for the
// tiny matrices we see (operator norms, rank checks).
inline Vec sym_eigenvalues(Mat m, int sweeps = 64) {
    const int n = m.rows;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        if (off < 1e-300) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(m(p, q)) < 1e-300) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double mkp = m(k, p), mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double mpk = m(p, k), mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
    }
    Vec ev(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) ev[i] = m(i, i);
    return ev;
}

// Operator (spectral) norm: sqrt of the largest eigenvalue of m^T m.
inline double op_norm(const Mat& m) {
    if (m.rows == 0 || m.cols == 0) return 0.0;
    if (m.rows == 1 && m.cols == 1) return std::abs(m(0, 0));
    const Mat mtm = matmul(transpose(m), m);
    double lmax = 0.0;
    for (double ev : sym_eigenvalues(mtm)) lmax = std::max(lmax, ev);
    return std::sqrt(std::max(0.0, lmax));
}

// Smallest singular value of m (rows <= cols expected for row-rank checks).
inline double min_singular_value(const Mat& m) {
    const Mat mmt = matmul(m, transpose(m));
    double lmin = std::numeric_limits<double>::infinity();
    for (double ev : sym_eigenvalues(mmt)) lmin = std::min(lmin, ev);
    return std::sqrt(std::max(0.0, lmin));
}

inline bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace blowup

#endif
