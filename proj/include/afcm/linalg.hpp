#pragma once
// Small dense linear algebra for concept networks (n <= 64).
// Matrices are row-major; states are row vectors multiplying from the left.

#include <cmath>
#include <cstddef>
#include <vector>

namespace afcm {

using Vec = std::vector<double>;

struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    bool operator==(const Mat&) const = default;

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

// h * W (row vector times matrix)
Vec vec_mat(const Vec& h, const Mat& w);

// W * x (matrix times column vector)
Vec mat_vec(const Mat& w, const Vec& x);

// out(i, j) = u[i] * v[j]
Mat outer(const Vec& u, const Vec& v);

double norm2(const Vec& v);
double norm2_diff(const Vec& a, const Vec& b);
double frobenius(const Mat& m);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

// Solves a x = b by Gaussian elimination with partial pivoting.
// Returns false when the best available pivot is too small to trust.
bool solve_lu(Mat a, Vec b, Vec& x);

}  // namespace afcm
