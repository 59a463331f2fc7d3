#pragma once

#include <utility>
#include <vector>

#include "swbn/criteria.hpp"
#include "swbn/matrix.hpp"

namespace swbn {

// One SWBN layer. W, mu_e and v_e are mutated by forward_train only; the
// backward pass updates nothing here (gamma/beta gradients go to the
// optimizer, W is learned in the forward phase).
struct SwbnState {
    int d = 0;
    Matrix w;                     // d x d whitening parameters
    std::vector<double> gamma;    // scale, init 1
    std::vector<double> beta;     // shift, init 0
    std::vector<double> mu_e;     // expected mean, init 0
    std::vector<double> v_e;      // expected variance, init 1
    double alpha = 1e-5;          // whitening step size
    double eta = 0.95;            // moving-average momentum
    double eps = 1e-8;
    Criterion criterion = Criterion::KL;
};

SwbnState make_swbn_state(int d, Criterion criterion, double alpha = 1e-5,
                          double eta = 0.95, double eps = 1e-8);

struct BackpropCache {
    Matrix x;      // raw input, d x n
    Matrix x_s;    // standardized
    Matrix x_w;    // whitened
    std::vector<double> mu;
    std::vector<double> v;
};

// Faithful: the per-sample training-phase recipe (cross-sample coupling
// through mu and v is dropped). Exact: full Jacobian-vector product of the
// alpha=0 forward map including cross-sample terms, for gradient checking.
enum class BackwardMode { Faithful, Exact };

struct LayerGrads {
    Matrix grad_x;
    std::vector<double> grad_gamma;
    std::vector<double> grad_beta;
};

// Training forward pass: batch stats (variance divisor n-1), EMA update,
// standardize, covariance (divisor n), W update + symmetrization, whiten,
// scale/shift. Mutates state; requires n >= 2.
Matrix forward_train(const Matrix& x, SwbnState& state, BackpropCache* cache = nullptr,
                     OpCounter* counter = nullptr);

LayerGrads backward(const Matrix& grad_out, const BackpropCache& cache,
                    const SwbnState& state, BackwardMode mode = BackwardMode::Faithful);

// Prediction path: standardize with mu_e/v_e, whiten with the learned W,
// scale and shift. Read-only; columns are processed independently.
Matrix forward_predict(const Matrix& x, const SwbnState& state);
std::vector<double> forward_predict(const std::vector<double>& x, const SwbnState& state);

// Pre-scale/shift prediction features (W x^S), used for whitening-effect
// measurements.
Matrix predict_whitened(const Matrix& x, const SwbnState& state);

// d x h x w x n tensor stored flat with n fastest; the reshape to
// d x (h*w*n) keeps the channel as the row index and is bit-exact both ways.
struct Tensor4 {
    int d = 0, h = 0, w = 0, n = 0;
    std::vector<double> data;

    double& at(int c, int y, int x, int s) {
        return data[((static_cast<size_t>(c) * h + y) * w + x) * n + s];
    }
};

Matrix reshape_nchw(const Tensor4& t);
Tensor4 reshape_nchw_inverse(const Matrix& m, int d, int h, int w, int n);

// Collapses the prediction path into x -> A x + b.
std::pair<Matrix, std::vector<double>> fold_into_affine(const SwbnState& state);

}  // namespace swbn
