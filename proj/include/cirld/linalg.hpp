#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cirld {

// Dense row-major square matrix. Regime counts are tiny (N <= ~16), so
// everything here is plain O(n^3) with partial pivoting.
struct SquareMat {
    int n = 0;
    std::vector<double> a;

    SquareMat() = default;
    explicit SquareMat(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

// y = A^T x  (used by left-eigenvector iterations).
inline void mat_tvec(const SquareMat& m, const std::vector<double>& x, std::vector<double>& y) {
    y.assign(m.n, 0.0);
    for (int i = 0; i < m.n; ++i) {
        const double xi = x[i];
        for (int j = 0; j < m.n; ++j) y[j] += m(i, j) * xi;
    }
}

// y = A x
inline void mat_vec(const SquareMat& m, const std::vector<double>& x, std::vector<double>& y) {
    y.assign(m.n, 0.0);
    for (int i = 0; i < m.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
        y[i] = s;
    }
}

// Solves A x = b in place via LU with partial pivoting. Throws on a
// numerically singular pivot.
std::vector<double> lu_solve(SquareMat a, std::vector<double> b);

}  // namespace cirld
