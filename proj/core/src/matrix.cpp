#include "swbn/matrix.hpp"

#include <cblas.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace swbn {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::string shape_str(const Matrix& a) {
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

}  // namespace

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    require(rows > 0 && cols > 0, "matrix dimensions must be positive");
    data_.assign(static_cast<size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    require(rows > 0 && cols > 0, "matrix dimensions must be positive");
    require(data_.size() == static_cast<size_t>(rows) * cols,
            "matrix data length " + std::to_string(data_.size()) + " does not match " +
                shape_str(*this));
    for (double v : data_)
        if (!std::isfinite(v)) throw std::invalid_argument("matrix entries must be finite");
}

Matrix Matrix::identity(int d) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b, OpCounter* counter) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul shape mismatch: " + shape_str(a) + " * " +
                                    shape_str(b));
    Matrix c(a.rows(), b.cols());
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, a.rows(), b.cols(), a.cols(), 1.0,
                a.data(), a.cols(), b.data(), b.cols(), 0.0, c.data(), c.cols());
    if (counter)
        counter->matmul_mults +=
            static_cast<long long>(a.rows()) * a.cols() * b.cols();
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
    return t;
}

Matrix sample_covariance(const Matrix& xs, OpCounter* counter) {
    const int d = xs.rows();
    const int n = xs.cols();
    require(n >= 1, "sample_covariance needs at least one column");
    Matrix cov(d, d);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, d, d, n, 1.0 / n, xs.data(), n,
                xs.data(), n, 0.0, cov.data(), d);
    // dgemm output of A*A^T is symmetric only up to rounding; enforce it.
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) cov(j, i) = cov(i, j);
    if (counter) counter->matmul_mults += static_cast<long long>(d) * n * d;
    return cov;
}

Matrix symmetrize(const Matrix& a) {
    require(a.rows() == a.cols(), "symmetrize needs a square matrix, got " + shape_str(a));
    Matrix s(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    return s;
}

double frobenius_norm(const Matrix& a) {
    double sum = 0.0;
    const double* p = a.data();
    for (size_t i = 0; i < a.size(); ++i) sum += p[i] * p[i];
    return std::sqrt(sum);
}

double mean_abs_offdiag(const Matrix& a) {
    require(a.rows() == a.cols(), "mean_abs_offdiag needs a square matrix");
    const int d = a.rows();
    require(d >= 2, "mean_abs_offdiag needs d >= 2");
    double sum = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) sum += std::fabs(a(i, j));
    return sum / (static_cast<double>(d) * d - d);
}

Matrix add(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "add shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "sub shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

Matrix cholesky(const Matrix& a) {
    require(a.rows() == a.cols(), "cholesky needs a square matrix");
    const int d = a.rows();
    Matrix l(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double sum = a(i, j);
            for (int k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
            if (i == j) {
                if (sum <= 0.0 || !std::isfinite(sum))
                    throw std::domain_error("matrix is not positive-definite");
                l(i, i) = std::sqrt(sum);
            } else {
                l(i, j) = sum / l(j, j);
            }
        }
    }
    return l;
}

bool all_finite(const Matrix& a) {
    for (size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a.data()[i])) return false;
    return true;
}

void write_csv(const Matrix& a, std::ostream& out) {
    char buf[40];
    for (int r = 0; r < a.rows(); ++r) {
        for (int c = 0; c < a.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", a(r, c));
            if (c) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

void write_csv(const Matrix& a, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    write_csv(a, f);
}

void write_pgm(const Matrix& a, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "P5\n" << a.cols() << ' ' << a.rows() << "\n255\n";
    for (int r = 0; r < a.rows(); ++r) {
        for (int c = 0; c < a.cols(); ++c) {
            double v = (a(r, c) + 1.0) * 0.5 * 255.0;
            if (v < 0.0) v = 0.0;
            if (v > 255.0) v = 255.0;
            unsigned char byte = static_cast<unsigned char>(std::lround(v));
            f.write(reinterpret_cast<const char*>(&byte), 1);
        }
    }
}

}  // namespace swbn
