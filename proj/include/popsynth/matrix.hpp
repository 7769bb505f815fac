#pragma once

#include <cstddef>
#include <vector>

#include "popsynth/errors.hpp"
#include "popsynth/rng.hpp"

namespace popsynth {

/// Dense row-major matrix of doubles. All training math is 64-bit.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

    static Matrix filled_normal(std::size_t rows, std::size_t cols, CounterRng& rng) {
        Matrix m(rows, cols);
        for (double& v : m.data_) v = rng.next_normal();
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// out = a * b^T-free product: a is n x k, b is k x m.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), ErrorCode::ShapeMismatch, "matmul inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

/// a (n x k) times b transposed (m x k) -> n x m.
inline Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), ErrorCode::ShapeMismatch, "matmul_bt inner dimensions differ");
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
            out(i, j) = acc;
        }
    }
    return out;
}

/// a transposed (n x k) times b (n x m) -> k x m.
inline Matrix matmul_at(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), ErrorCode::ShapeMismatch, "matmul_at inner dimensions differ");
    Matrix out(a.cols(), b.cols());
    for (std::size_t n = 0; n < a.rows(); ++n) {
        const double* arow = a.row_ptr(n);
        const double* brow = b.row_ptr(n);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double ank = arow[k];
            if (ank == 0.0) continue;
            double* orow = out.row_ptr(k);
            for (std::size_t m = 0; m < b.cols(); ++m) orow[m] += ank * brow[m];
        }
    }
    return out;
}

}  // namespace popsynth
