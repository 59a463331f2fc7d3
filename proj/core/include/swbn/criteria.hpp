#pragma once

#include <utility>
#include <vector>

#include "swbn/matrix.hpp"

namespace swbn {

enum class Criterion { KL, Fro };

const char* criterion_name(Criterion c);
Criterion parse_criterion(const std::string& name);

// Whitening distance from the identity. eval_ckl requires a symmetric
// positive-definite input; the log-determinant goes through Cholesky.
double eval_ckl(const Matrix& sigma_y);
double eval_cfro(const Matrix& sigma_y);

// Update matrix for W <- W - alpha * delta_w(...). The Fro branch returns
// zero once ||I - W Sigma W^T||_F drops below 1e-8 (converged fixed point;
// the denominator would blow up).
Matrix delta_w(Criterion criterion, const Matrix& w, const Matrix& sigma,
               OpCounter* counter = nullptr);

struct WhitenIterReport {
    int iterations = 0;
    double final_distance = 0.0;
    bool converged = false;
    std::vector<std::pair<int, double>> trajectory;  // (iteration, fro distance)
};

// Iterates W <- symmetrize(W - alpha * delta_w) from W = I on a fixed
// unit-diagonal SPD sigma until ||W Sigma W^T - I||_F < tol or max_iters.
// Throws std::runtime_error (with the iteration index) on divergence.
std::pair<Matrix, WhitenIterReport> whiten_iterate(const Matrix& sigma, Criterion criterion,
                                                   double alpha, int max_iters, double tol);

void write_trajectory_csv(const WhitenIterReport& report, const std::string& path);

}  // namespace swbn
