#ifndef GRAPHNNK_MATRIX_HPP
#define GRAPHNNK_MATRIX_HPP

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace graphnnk {

/// Dense row-major matrix of doubles. Only what the encoder and solver need.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// out(n x o) = in(n x i) * W^T(i x o) + bias, W stored o x i.
inline Matrix affine(const Matrix& in, const Matrix& weight, std::span<const double> bias) {
    assert(in.cols() == weight.cols() && bias.size() == weight.rows());
    Matrix out(in.rows(), weight.rows());
    for (std::size_t r = 0; r < in.rows(); ++r) {
        auto x = in.row(r);
        auto y = out.row(r);
        for (std::size_t o = 0; o < weight.rows(); ++o) y[o] = bias[o] + dot(x, weight.row(o));
    }
    return out;
}

}  // namespace graphnnk

#endif
