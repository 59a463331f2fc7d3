#pragma once

#include <vector>

#include "swbn/matrix.hpp"
#include "swbn/swbn_layer.hpp"

namespace swbn {

// Plain batch normalization sharing the SWBN layer conventions (variance
// divisor n-1, EMA momentum eta, predict from mu_e/v_e).
struct BnState {
    int d = 0;
    std::vector<double> gamma, beta, mu_e, v_e;
    double eta = 0.95;
    double eps = 1e-8;
};

BnState make_bn_state(int d, double eta = 0.95, double eps = 1e-8);

struct BnCache {
    Matrix x, x_s;
    std::vector<double> mu, v;
};

Matrix bn_forward_train(const Matrix& x, BnState& state, BnCache* cache = nullptr);
// Exact full backward, including cross-sample terms through mu and v.
LayerGrads bn_backward(const Matrix& grad_out, const BnCache& cache, const BnState& state);
Matrix bn_predict(const Matrix& x, const BnState& state);
Matrix bn_standardized_predict(const Matrix& x, const BnState& state);  // pre-gamma/beta

// Newton iteration W_k = (3 W_{k-1} - W_{k-1}^3 Sigma_N) / 2 on the
// trace-normalized covariance, W_0 = I; the result is rescaled by
// 1/sqrt(tr(sigma)) so that W sigma W^T ~= I.
Matrix iternorm_whiten(const Matrix& sigma, int T, OpCounter* counter = nullptr);

struct IterNormState {
    int d = 0;
    int iterations = 5;           // Newton steps per batch
    std::vector<double> gamma, beta, mu_e;
    Matrix w_e;                   // EMA of per-batch whitening matrices
    double eta = 0.95;
    double eps = 1e-8;
};

IterNormState make_iternorm_state(int d, int iterations = 5, double eta = 0.95,
                                  double eps = 1e-8);

struct IterNormCache {
    Matrix x_w;                   // whitened centered input
    Matrix w;                     // this batch's whitening matrix
    std::vector<double> mu;
    int n = 0;
};

Matrix iternorm_forward_train(const Matrix& x, IterNormState& state,
                              IterNormCache* cache = nullptr, OpCounter* counter = nullptr);
// W is treated as a constant (no gradient through the Newton chain).
LayerGrads iternorm_backward(const Matrix& grad_out, const IterNormCache& cache,
                             const IterNormState& state);
Matrix iternorm_predict(const Matrix& x, const IterNormState& state);
Matrix iternorm_whitened_predict(const Matrix& x, const IterNormState& state);

}  // namespace swbn
