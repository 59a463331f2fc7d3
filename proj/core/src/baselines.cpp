#include "swbn/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace swbn {

namespace {

void center_columns(const Matrix& x, const std::vector<double>& mu, Matrix& out) {
    for (int k = 0; k < x.rows(); ++k)
        for (int j = 0; j < x.cols(); ++j) out(k, j) = x(k, j) - mu[k];
}

std::vector<double> column_means(const Matrix& x) {
    std::vector<double> mu(x.rows(), 0.0);
    for (int k = 0; k < x.rows(); ++k) {
        double sum = 0.0;
        for (int j = 0; j < x.cols(); ++j) sum += x(k, j);
        mu[k] = sum / x.cols();
    }
    return mu;
}

}  // namespace

BnState make_bn_state(int d, double eta, double eps) {
    if (d < 1) throw std::invalid_argument("bn: d must be positive");
    BnState s;
    s.d = d;
    s.gamma.assign(d, 1.0);
    s.beta.assign(d, 0.0);
    s.mu_e.assign(d, 0.0);
    s.v_e.assign(d, 1.0);
    s.eta = eta;
    s.eps = eps;
    return s;
}

Matrix bn_forward_train(const Matrix& x, BnState& state, BnCache* cache) {
    const int d = state.d, n = x.cols();
    if (x.rows() != d) throw std::invalid_argument("bn forward: channel count mismatch");
    if (n < 2) throw std::invalid_argument("bn forward: batch size must be >= 2");
    if (!all_finite(x)) throw std::invalid_argument("bn forward: non-finite input");

    std::vector<double> mu = column_means(x);
    std::vector<double> v(d, 0.0);
    for (int k = 0; k < d; ++k) {
        double sq = 0.0;
        for (int j = 0; j < n; ++j) {
            double c = x(k, j) - mu[k];
            sq += c * c;
        }
        v[k] = sq / (n - 1);
    }
    for (int k = 0; k < d; ++k) {
        state.mu_e[k] = state.eta * state.mu_e[k] + (1.0 - state.eta) * mu[k];
        state.v_e[k] = state.eta * state.v_e[k] + (1.0 - state.eta) * v[k];
    }

    Matrix xs(d, n), out(d, n);
    for (int k = 0; k < d; ++k) {
        double inv = 1.0 / std::sqrt(v[k] + state.eps);
        for (int j = 0; j < n; ++j) {
            xs(k, j) = (x(k, j) - mu[k]) * inv;
            out(k, j) = xs(k, j) * state.gamma[k] + state.beta[k];
        }
    }
    if (cache) {
        cache->x = x;
        cache->x_s = std::move(xs);
        cache->mu = std::move(mu);
        cache->v = std::move(v);
    }
    return out;
}

LayerGrads bn_backward(const Matrix& grad_out, const BnCache& cache, const BnState& state) {
    const int d = state.d, n = cache.x.cols();
    if (!grad_out.same_shape(cache.x_s))
        throw std::invalid_argument("bn backward: gradient shape mismatch");
    LayerGrads g;
    g.grad_gamma.assign(d, 0.0);
    g.grad_beta.assign(d, 0.0);
    g.grad_x = Matrix(d, n);
    for (int k = 0; k < d; ++k) {
        double inv_s = 1.0 / std::sqrt(cache.v[k] + state.eps);
        double u_mean = 0.0, u_dot_xs = 0.0;
        for (int j = 0; j < n; ++j) {
            double u = grad_out(k, j) * state.gamma[k];
            g.grad_gamma[k] += grad_out(k, j) * cache.x_s(k, j);
            g.grad_beta[k] += grad_out(k, j);
            u_mean += u;
            u_dot_xs += u * cache.x_s(k, j);
        }
        u_mean /= n;
        for (int j = 0; j < n; ++j) {
            double u = grad_out(k, j) * state.gamma[k];
            g.grad_x(k, j) =
                inv_s * (u - u_mean - cache.x_s(k, j) * u_dot_xs / (n - 1));
        }
    }
    return g;
}

Matrix bn_standardized_predict(const Matrix& x, const BnState& state) {
    Matrix out(x.rows(), x.cols());
    for (int k = 0; k < x.rows(); ++k) {
        double inv = 1.0 / std::sqrt(state.v_e[k] + state.eps);
        for (int j = 0; j < x.cols(); ++j) out(k, j) = (x(k, j) - state.mu_e[k]) * inv;
    }
    return out;
}

Matrix bn_predict(const Matrix& x, const BnState& state) {
    Matrix out = bn_standardized_predict(x, state);
    for (int k = 0; k < x.rows(); ++k)
        for (int j = 0; j < x.cols(); ++j)
            out(k, j) = out(k, j) * state.gamma[k] + state.beta[k];
    return out;
}

Matrix iternorm_whiten(const Matrix& sigma, int T, OpCounter* counter) {
    if (sigma.rows() != sigma.cols())
        throw std::invalid_argument("iternorm_whiten needs a square matrix");
    if (T < 1) throw std::invalid_argument("iternorm_whiten needs T >= 1");
    const int d = sigma.rows();
    double trace = 0.0;
    for (int i = 0; i < d; ++i) trace += sigma(i, i);
    if (trace <= 0.0) throw std::domain_error("iternorm_whiten: non-positive trace");
    Matrix sigma_n = scale(sigma, 1.0 / trace);
    Matrix w = Matrix::identity(d);
    for (int k = 0; k < T; ++k) {
        Matrix w2 = matmul(w, w, counter);
        Matrix w3 = matmul(w2, w, counter);
        w = scale(sub(scale(w, 3.0), matmul(w3, sigma_n, counter)), 0.5);
    }
    return scale(w, 1.0 / std::sqrt(trace));
}

IterNormState make_iternorm_state(int d, int iterations, double eta, double eps) {
    if (d < 1) throw std::invalid_argument("iternorm: d must be positive");
    if (iterations < 1) throw std::invalid_argument("iternorm: iterations must be >= 1");
    IterNormState s;
    s.d = d;
    s.iterations = iterations;
    s.gamma.assign(d, 1.0);
    s.beta.assign(d, 0.0);
    s.mu_e.assign(d, 0.0);
    s.w_e = Matrix::identity(d);
    s.eta = eta;
    s.eps = eps;
    return s;
}

Matrix iternorm_forward_train(const Matrix& x, IterNormState& state, IterNormCache* cache,
                              OpCounter* counter) {
    const int d = state.d, n = x.cols();
    if (x.rows() != d) throw std::invalid_argument("iternorm forward: channel count mismatch");
    if (n < 2) throw std::invalid_argument("iternorm forward: batch size must be >= 2");

    std::vector<double> mu = column_means(x);
    Matrix xc(d, n);
    center_columns(x, mu, xc);
    Matrix cov = sample_covariance(xc, counter);
    for (int i = 0; i < d; ++i) cov(i, i) += state.eps;
    Matrix w = iternorm_whiten(cov, state.iterations, counter);
    Matrix xw = matmul(w, xc, counter);

    Matrix out(d, n);
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < n; ++j) out(k, j) = xw(k, j) * state.gamma[k] + state.beta[k];

    for (int k = 0; k < d; ++k)
        state.mu_e[k] = state.eta * state.mu_e[k] + (1.0 - state.eta) * mu[k];
    state.w_e = add(scale(state.w_e, state.eta), scale(w, 1.0 - state.eta));

    if (cache) {
        cache->x_w = std::move(xw);
        cache->w = std::move(w);
        cache->mu = std::move(mu);
        cache->n = n;
    }
    return out;
}

LayerGrads iternorm_backward(const Matrix& grad_out, const IterNormCache& cache,
                             const IterNormState& state) {
    const int d = state.d, n = cache.n;
    if (!grad_out.same_shape(cache.x_w))
        throw std::invalid_argument("iternorm backward: gradient shape mismatch");
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
    // x -> W (x - mu) with W constant; only the centering couples samples.
    Matrix gx = matmul(transpose(cache.w), g_scaled);
    for (int k = 0; k < d; ++k) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += gx(k, j);
        mean /= n;
        for (int j = 0; j < n; ++j) gx(k, j) -= mean;
    }
    g.grad_x = std::move(gx);
    return g;
}

Matrix iternorm_whitened_predict(const Matrix& x, const IterNormState& state) {
    Matrix xc(x.rows(), x.cols());
    center_columns(x, state.mu_e, xc);
    return matmul(state.w_e, xc);
}

Matrix iternorm_predict(const Matrix& x, const IterNormState& state) {
    Matrix out = iternorm_whitened_predict(x, state);
    for (int k = 0; k < x.rows(); ++k)
        for (int j = 0; j < x.cols(); ++j)
            out(k, j) = out(k, j) * state.gamma[k] + state.beta[k];
    return out;
}

}  // namespace swbn
