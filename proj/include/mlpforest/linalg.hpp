#pragma once

// Dense row-major double matrices and a cyclic Jacobi eigensolver for
// symmetric input. Just enough linear algebra for covariance whitening;
// no rectangular SVD, no sparse storage, no complex arithmetic.

#include <cstddef>
#include <span>
#include <vector>

namespace mlpforest {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// eigenvalues sorted descending; eigenvectors stored as columns, column j
// paired with eigenvalues[j]. Columns are sign-fixed so the largest-magnitude
// entry is positive, which makes the decomposition deterministic.
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

// Standard product; throws DimensionError when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

bool all_finite(const Matrix& m);

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Sweeps run until the off-diagonal Frobenius norm drops below tol, or
// max_sweeps is exhausted (ConvergenceError). Input must be square and
// symmetric within 1e-10 per entry (ArgumentError otherwise).
EigenDecomposition jacobi_eigh(const Matrix& sym, double tol = 1e-10,
                               std::size_t max_sweeps = 100);

} // namespace mlpforest
