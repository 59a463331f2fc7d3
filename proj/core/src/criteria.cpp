#include "swbn/criteria.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace swbn {

namespace {
constexpr double kFroGuard = 1e-8;

Matrix whitened_cov(const Matrix& w, const Matrix& sigma) {
    return matmul(matmul(w, sigma), transpose(w));
}
}  // namespace

const char* criterion_name(Criterion c) { return c == Criterion::KL ? "kl" : "fro"; }

Criterion parse_criterion(const std::string& name) {
    if (name == "kl") return Criterion::KL;
    if (name == "fro") return Criterion::Fro;
    throw std::invalid_argument("unknown criterion: " + name);
}

double eval_ckl(const Matrix& sigma_y) {
    if (sigma_y.rows() != sigma_y.cols())
        throw std::invalid_argument("eval_ckl needs a square matrix");
    const int d = sigma_y.rows();
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (std::fabs(sigma_y(i, j) - sigma_y(j, i)) > 1e-10)
                throw std::invalid_argument("eval_ckl input is not symmetric");
    // logdet from the Cholesky diagonal; failure doubles as the PD check.
    Matrix l = cholesky(sigma_y);
    double trace = 0.0, logdet = 0.0;
    for (int i = 0; i < d; ++i) {
        trace += sigma_y(i, i);
        logdet += 2.0 * std::log(l(i, i));
    }
    return 0.5 * (trace - logdet - d);
}

double eval_cfro(const Matrix& sigma_y) {
    if (sigma_y.rows() != sigma_y.cols())
        throw std::invalid_argument("eval_cfro needs a square matrix");
    return 0.5 * frobenius_norm(sub(Matrix::identity(sigma_y.rows()), sigma_y));
}

Matrix delta_w(Criterion criterion, const Matrix& w, const Matrix& sigma, OpCounter* counter) {
    if (w.rows() != w.cols() || !w.same_shape(sigma))
        throw std::invalid_argument("delta_w needs square w and sigma of equal size");
    const int d = w.rows();
    Matrix ws = matmul(w, sigma, counter);
    Matrix s = matmul(ws, transpose(w), counter);  // W Sigma W^T
    Matrix s_minus_i = sub(s, Matrix::identity(d));
    if (criterion == Criterion::KL) return matmul(s_minus_i, w, counter);
    double denom = frobenius_norm(s_minus_i);
    if (denom < kFroGuard) return Matrix(d, d);
    return scale(matmul(s_minus_i, ws, counter), 1.0 / denom);
}

std::pair<Matrix, WhitenIterReport> whiten_iterate(const Matrix& sigma, Criterion criterion,
                                                   double alpha, int max_iters, double tol) {
    if (alpha <= 0.0 || tol <= 0.0)
        throw std::invalid_argument("whiten_iterate needs alpha > 0 and tol > 0");
    const int d = sigma.rows();
    Matrix w = Matrix::identity(d);
    WhitenIterReport report;
    double dist = frobenius_norm(sub(whitened_cov(w, sigma), Matrix::identity(d)));
    report.trajectory.emplace_back(0, dist);
    while (dist >= tol && report.iterations < max_iters) {
        w = symmetrize(sub(w, scale(delta_w(criterion, w, sigma), alpha)));
        ++report.iterations;
        if (!all_finite(w))
            throw std::runtime_error("whiten_iterate diverged at iteration " +
                                     std::to_string(report.iterations));
        dist = frobenius_norm(sub(whitened_cov(w, sigma), Matrix::identity(d)));
        report.trajectory.emplace_back(report.iterations, dist);
    }
    report.final_distance = dist;
    report.converged = dist < tol;
    return {std::move(w), std::move(report)};
}

void write_trajectory_csv(const WhitenIterReport& report, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "iter,fro_distance\n";
    char buf[40];
    for (const auto& [it, dist] : report.trajectory) {
        std::snprintf(buf, sizeof(buf), "%.17g", dist);
        f << it << ',' << buf << '\n';
    }
}

}  // namespace swbn
