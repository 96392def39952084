#include "afcm/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace afcm {

Vec vec_mat(const Vec& h, const Mat& w) {
    Vec out(w.cols, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double hi = h[i];
        if (hi == 0.0) continue;
        const double* row = &w.a[i * w.cols];
        for (std::size_t j = 0; j < w.cols; ++j) out[j] += hi * row[j];
    }
    return out;
}

Vec mat_vec(const Mat& w, const Vec& x) {
    Vec out(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = &w.a[i * w.cols];
        double s = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j) s += row[j] * x[j];
        out[i] = s;
    }
    return out;
}

Mat outer(const Vec& u, const Vec& v) {
    Mat m(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
    return m;
}

double norm2(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm2_diff(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double frobenius(const Mat& m) {
    double s = 0.0;
    for (double x : m.a) s += x * x;
    return std::sqrt(s);
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Mat& m) {
    for (double x : m.a)
        if (!std::isfinite(x)) return false;
    return true;
}

bool solve_lu(Mat a, Vec b, Vec& x) {
    const std::size_t n = a.rows;
    double scale = 0.0;
    for (double v : a.a) scale = std::max(scale, std::abs(v));
    const double tiny = 1e-13 * (scale + 1.0);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::abs(a(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < tiny) return false;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            a(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
            b[i] -= f * b[k];
        }
    }

    x.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
        x[ii] = s / a(ii, ii);
    }
    return true;
}

}  // namespace afcm
