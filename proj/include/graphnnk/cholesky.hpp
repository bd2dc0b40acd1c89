#ifndef GRAPHNNK_CHOLESKY_HPP
#define GRAPHNNK_CHOLESKY_HPP

#include "matrix.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace graphnnk {

/// Lower-triangular factor L with A = L L^T, or nullopt if a pivot is not
/// strictly positive (A not numerically positive definite).
inline std::optional<Matrix> cholesky_factor(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t p = 0; p < j; ++p) d -= l(j, p) * l(j, p);
        if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= l(i, p) * l(j, p);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

/// Solves L L^T x = b.
inline std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < i; ++p) y[i] -= l(i, p) * y[p];
        y[i] /= l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t p = i + 1; p < n; ++p) y[i] -= l(p, i) * y[p];
        y[i] /= l(i, i);
    }
    return y;
}

}  // namespace graphnnk

#endif
