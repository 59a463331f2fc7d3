#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace swbn {

// Accumulates scalar multiplications attributed to matrix products.
// Elementwise work and additions are not counted.
struct OpCounter {
    long long matmul_mults = 0;
};

// Dense row-major matrix of doubles. Activations are stored d x n with
// features as rows, so a covariance is X * X^T without transposes.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);
    Matrix(int rows, int cols, std::vector<double> values);

    static Matrix identity(int d);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    size_t size() const { return data_.size(); }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b, OpCounter* counter = nullptr);
Matrix transpose(const Matrix& a);

// (1/n) * xs * xs^T, divisor n (not n-1). Counted as one d x n x d product.
Matrix sample_covariance(const Matrix& xs, OpCounter* counter = nullptr);

Matrix symmetrize(const Matrix& a);
double frobenius_norm(const Matrix& a);

// Mean of |a_ij| over i != j; requires a square matrix with d >= 2.
double mean_abs_offdiag(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

// Lower-triangular Cholesky factor; throws std::domain_error if the input
// is not positive-definite.
Matrix cholesky(const Matrix& a);

bool all_finite(const Matrix& a);

// One CSV line per matrix row, entries formatted with %.17g.
void write_csv(const Matrix& a, std::ostream& out);
void write_csv(const Matrix& a, const std::string& path);

// 8-bit binary PGM ("P5"); values mapped linearly from [-1, 1] to
// [0, 255] and clamped.
void write_pgm(const Matrix& a, const std::string& path);

}  // namespace swbn
