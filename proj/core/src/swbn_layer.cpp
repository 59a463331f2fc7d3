#include "swbn/swbn_layer.hpp"

#include <cmath>
#include <stdexcept>

namespace swbn {

namespace {

struct BatchStats {
    std::vector<double> mu, v;
};

Matrix standardize(const Matrix& x, const std::vector<double>& mu, const std::vector<double>& v,
                   double eps) {
    Matrix xs(x.rows(), x.cols());
    for (int k = 0; k < x.rows(); ++k) {
        double inv = 1.0 / std::sqrt(v[k] + eps);
        for (int j = 0; j < x.cols(); ++j) xs(k, j) = (x(k, j) - mu[k]) * inv;
    }
    return xs;
}

Matrix scale_shift(const Matrix& xw, const std::vector<double>& gamma,
                   const std::vector<double>& beta) {
    Matrix out(xw.rows(), xw.cols());
    for (int k = 0; k < xw.rows(); ++k)
        for (int j = 0; j < xw.cols(); ++j) out(k, j) = xw(k, j) * gamma[k] + beta[k];
    return out;
}

}  // namespace

SwbnState make_swbn_state(int d, Criterion criterion, double alpha, double eta, double eps) {
    if (d < 1) throw std::invalid_argument("swbn: d must be positive");
    // alpha == 0 is allowed for gradient checking (W stays fixed).
    if (alpha < 0.0 || eps <= 0.0 || eta <= 0.0 || eta >= 1.0)
        throw std::invalid_argument("swbn: bad hyperparameters");
    SwbnState s;
    s.d = d;
    s.w = Matrix::identity(d);
    s.gamma.assign(d, 1.0);
    s.beta.assign(d, 0.0);
    s.mu_e.assign(d, 0.0);
    s.v_e.assign(d, 1.0);
    s.alpha = alpha;
    s.eta = eta;
    s.eps = eps;
    s.criterion = criterion;
    return s;
}

Matrix forward_train(const Matrix& x, SwbnState& state, BackpropCache* cache,
                     OpCounter* counter) {
    const int d = state.d, n = x.cols();
    if (x.rows() != d) throw std::invalid_argument("swbn forward: channel count mismatch");
    if (n < 2) throw std::invalid_argument("swbn forward: batch size must be >= 2");
    if (!all_finite(x)) throw std::invalid_argument("swbn forward: non-finite input");

    // Statistics, EMA update, and standardization are fused row by row so each
    // row is read while still cached.
    BatchStats stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    Matrix xs(d, n);
    for (int k = 0; k < d; ++k) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j) sum += x(k, j);
        const double mu = sum / n;
        double sq = 0.0;
        for (int j = 0; j < n; ++j) {
            double c = x(k, j) - mu;
            sq += c * c;
        }
        const double v = sq / (n - 1);
        stats.mu[k] = mu;
        stats.v[k] = v;
        state.mu_e[k] = state.eta * state.mu_e[k] + (1.0 - state.eta) * mu;
        state.v_e[k] = state.eta * state.v_e[k] + (1.0 - state.eta) * v;
        const double inv = 1.0 / std::sqrt(v + state.eps);
        for (int j = 0; j < n; ++j) xs(k, j) = (x(k, j) - mu) * inv;
    }
    Matrix cov = sample_covariance(xs, counter);
    state.w = symmetrize(sub(state.w, scale(delta_w(state.criterion, state.w, cov, counter),
                                            state.alpha)));
    Matrix xw = matmul(state.w, xs, counter);
    Matrix out = scale_shift(xw, state.gamma, state.beta);

    if (cache) {
        cache->x = x;
        cache->x_s = std::move(xs);
        cache->x_w = std::move(xw);
        cache->mu = std::move(stats.mu);
        cache->v = std::move(stats.v);
    }
    return out;
}

LayerGrads backward(const Matrix& grad_out, const BackpropCache& cache, const SwbnState& state,
                    BackwardMode mode) {
    const int d = state.d, n = cache.x.cols();
    if (!grad_out.same_shape(cache.x_w))
        throw std::invalid_argument("swbn backward: gradient shape mismatch");

    LayerGrads g;
    g.grad_gamma.assign(d, 0.0);
    g.grad_beta.assign(d, 0.0);
    Matrix g_scaled(d, n);
    for (int k = 0; k < d; ++k) {
        for (int j = 0; j < n; ++j) {
            g.grad_gamma[k] += grad_out(k, j) * cache.x_w(k, j);
            g.grad_beta[k] += grad_out(k, j);
            g_scaled(k, j) = grad_out(k, j) * state.gamma[k];
        }
    }
    // d(L)/d(x_s) with W fixed.
    Matrix u = matmul(transpose(state.w), g_scaled);
    g.grad_x = Matrix(d, n);

    const double dmu_dx = 1.0 / n;
    const double two_over_n1 = 2.0 / (n - 1);
    if (mode == BackwardMode::Faithful) {
        for (int k = 0; k < d; ++k) {
            double inv_s = 1.0 / std::sqrt(cache.v[k] + state.eps);
            double inv_s3 = inv_s * inv_s * inv_s;
            for (int l = 0; l < n; ++l) {
                double dxs_dv = -0.5 * (cache.x_s(k, l) - cache.mu[k]) * inv_s3;
                double dv_dx = (cache.x(k, l) - cache.mu[k]) * two_over_n1;
                double dxs_dx = inv_s + dxs_dv * dv_dx + (-inv_s) * dmu_dx;
                g.grad_x(k, l) = dxs_dx * u(k, l);
            }
        }
    } else {
        for (int k = 0; k < d; ++k) {
            double inv_s = 1.0 / std::sqrt(cache.v[k] + state.eps);
            double u_mean = 0.0, u_dot_xs = 0.0;
            for (int l = 0; l < n; ++l) {
                u_mean += u(k, l);
                u_dot_xs += u(k, l) * cache.x_s(k, l);
            }
            u_mean /= n;
            double coef = u_dot_xs / (n - 1);
            for (int l = 0; l < n; ++l)
                g.grad_x(k, l) = inv_s * (u(k, l) - u_mean - cache.x_s(k, l) * coef);
        }
    }
    return g;
}

Matrix predict_whitened(const Matrix& x, const SwbnState& state) {
    if (x.rows() != state.d)
        throw std::invalid_argument("swbn predict: channel count mismatch");
    return matmul(state.w, standardize(x, state.mu_e, state.v_e, state.eps));
}

Matrix forward_predict(const Matrix& x, const SwbnState& state) {
    return scale_shift(predict_whitened(x, state), state.gamma, state.beta);
}

std::vector<double> forward_predict(const std::vector<double>& x, const SwbnState& state) {
    Matrix col(state.d, 1, std::vector<double>(x));
    Matrix out = forward_predict(col, state);
    return std::vector<double>(out.data(), out.data() + state.d);
}

Matrix reshape_nchw(const Tensor4& t) {
    if (t.data.size() != static_cast<size_t>(t.d) * t.h * t.w * t.n)
        throw std::invalid_argument("reshape_nchw: tensor size mismatch");
    // Row-major d x (h*w*n) has the same flat layout as the tensor.
    return Matrix(t.d, t.h * t.w * t.n, t.data);
}

Tensor4 reshape_nchw_inverse(const Matrix& m, int d, int h, int w, int n) {
    if (m.rows() != d || m.cols() != h * w * n)
        throw std::invalid_argument("reshape_nchw_inverse: size mismatch");
    Tensor4 t;
    t.d = d;
    t.h = h;
    t.w = w;
    t.n = n;
    t.data.assign(m.data(), m.data() + m.size());
    return t;
}

std::pair<Matrix, std::vector<double>> fold_into_affine(const SwbnState& state) {
    const int d = state.d;
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            a(i, j) = state.gamma[i] * state.w(i, j) / std::sqrt(state.v_e[j] + state.eps);
    std::vector<double> b = state.beta;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b[i] -= a(i, j) * state.mu_e[j];
    return {std::move(a), std::move(b)};
}

}  // namespace swbn
