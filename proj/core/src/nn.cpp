#include "swbn/nn.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace swbn {

namespace {

void write_values(std::ostream& out, const std::string& tag, const double* p, size_t count) {
    out << tag;
    char buf[40];
    for (size_t i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", p[i]);
        out << ' ' << buf;
    }
    out << '\n';
}

void read_values(std::istream& in, const std::string& tag, double* p, size_t count) {
    std::string got;
    in >> got;
    if (got != tag)
        throw std::runtime_error("model checkpoint: expected '" + tag + "', got '" + got + "'");
    for (size_t i = 0; i < count; ++i)
        if (!(in >> p[i])) throw std::runtime_error("model checkpoint: truncated " + tag);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Matrix correlation_of(const Matrix& feats) {
    const int d = feats.rows(), n = feats.cols();
    Matrix centered(d, n);
    for (int k = 0; k < d; ++k) {
        double mu = 0.0;
        for (int j = 0; j < n; ++j) mu += feats(k, j);
        mu /= n;
        for (int j = 0; j < n; ++j) centered(k, j) = feats(k, j) - mu;
    }
    Matrix cov = sample_covariance(centered);
    Matrix corr(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double denom = std::sqrt(cov(i, i) * cov(j, j)) + 1e-300;
            corr(i, j) = cov(i, j) / denom;
        }
    }
    return corr;
}

}  // namespace

Matrix dense_forward(const Matrix& x, const DenseLayer& layer) {
    Matrix y = matmul(layer.w, x);
    for (int k = 0; k < y.rows(); ++k)
        for (int j = 0; j < y.cols(); ++j) y(k, j) += layer.b[k];
    return y;
}

DenseGrads dense_backward(const Matrix& grad_y, const Matrix& x, const DenseLayer& layer) {
    DenseGrads g;
    g.grad_w = matmul(grad_y, transpose(x));
    g.grad_x = matmul(transpose(layer.w), grad_y);
    g.grad_b.assign(grad_y.rows(), 0.0);
    for (int k = 0; k < grad_y.rows(); ++k)
        for (int j = 0; j < grad_y.cols(); ++j) g.grad_b[k] += grad_y(k, j);
    return g;
}

Matrix relu_forward(const Matrix& x) {
    Matrix y = x;
    for (size_t i = 0; i < y.size(); ++i)
        if (y.data()[i] < 0.0) y.data()[i] = 0.0;
    return y;
}

Matrix relu_backward(const Matrix& grad_y, const Matrix& pre_activation) {
    Matrix g = grad_y;
    for (size_t i = 0; i < g.size(); ++i)
        if (pre_activation.data()[i] <= 0.0) g.data()[i] = 0.0;
    return g;
}

std::pair<double, Matrix> softmax_xent(const Matrix& logits, const std::vector<int>& labels) {
    const int c = logits.rows(), n = logits.cols();
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("softmax_xent: label count mismatch");
    Matrix grad(c, n);
    double loss = 0.0;
    for (int j = 0; j < n; ++j) {
        if (labels[j] < 0 || labels[j] >= c)
            throw std::out_of_range("softmax_xent: label out of range");
        double mx = logits(0, j);
        for (int k = 1; k < c; ++k) mx = std::max(mx, logits(k, j));
        double denom = 0.0;
        for (int k = 0; k < c; ++k) denom += std::exp(logits(k, j) - mx);
        loss += mx + std::log(denom) - logits(labels[j], j);
        for (int k = 0; k < c; ++k) {
            double p = std::exp(logits(k, j) - mx) / denom;
            grad(k, j) = (p - (k == labels[j] ? 1.0 : 0.0)) / n;
        }
    }
    return {loss / n, std::move(grad)};
}

void sgd_momentum_step(Matrix& params, Matrix& velocity, const Matrix& grads, double lr,
                       double momentum) {
    for (size_t i = 0; i < params.size(); ++i) {
        velocity.data()[i] = momentum * velocity.data()[i] + grads.data()[i];
        params.data()[i] -= lr * velocity.data()[i];
    }
}

void sgd_momentum_step(std::vector<double>& params, std::vector<double>& velocity,
                       const std::vector<double>& grads, double lr, double momentum) {
    for (size_t i = 0; i < params.size(); ++i) {
        velocity[i] = momentum * velocity[i] + grads[i];
        params[i] -= lr * velocity[i];
    }
}

Model::Model(const ModelSpec& spec, uint64_t seed) : spec_(spec) {
    if (spec.input_dim < 1 || spec.classes < 1)
        throw std::invalid_argument("model: bad dimensions");
    Rng rng(seed);
    auto init_dense = [&](int out, int in) {
        DenseLayer layer;
        layer.w = Matrix(out, in);
        double bound = std::sqrt(6.0 / (in + out));
        for (size_t i = 0; i < layer.w.size(); ++i)
            layer.w.data()[i] = rng.uniform(-bound, bound);
        layer.b.assign(out, 0.0);
        layer.vel_w = Matrix(out, in);
        layer.vel_b.assign(out, 0.0);
        return layer;
    };
    int in = spec.input_dim;
    for (int h : spec.hidden) {
        dense_.push_back(init_dense(h, in));
        if (spec.norm) {
            norms_.emplace_back(*spec.norm, h, spec.swbn_alpha, spec.iternorm_iters);
            vel_gamma_.emplace_back(h, 0.0);
            vel_beta_.emplace_back(h, 0.0);
        }
        in = h;
    }
    dense_.push_back(init_dense(spec.classes, in));
}

void Model::set_swbn_alpha(double alpha) {
    for (auto& norm : norms_)
        if (norm.kind() == NormKind::SwbnKL || norm.kind() == NormKind::SwbnFro)
            norm.swbn_state().alpha = alpha;
}

Matrix Model::forward_train(const Matrix& x, OpCounter* counter) {
    dense_in_.clear();
    relu_pre_.clear();
    Matrix cur = x;
    for (size_t i = 0; i + 1 < dense_.size(); ++i) {
        dense_in_.push_back(cur);
        cur = dense_forward(cur, dense_[i]);
        if (!norms_.empty()) cur = norms_[i].forward_train(cur, counter);
        relu_pre_.push_back(cur);
        cur = relu_forward(cur);
    }
    dense_in_.push_back(cur);
    return dense_forward(cur, dense_.back());
}

Model::Grads Model::backward(const Matrix& grad_logits, BackwardMode mode) {
    Grads g;
    g.dense.resize(dense_.size());
    g.norm.resize(norms_.size());
    Matrix grad = grad_logits;
    for (size_t ri = dense_.size(); ri-- > 0;) {
        if (ri + 1 < dense_.size()) {
            grad = relu_backward(grad, relu_pre_[ri]);
            if (!norms_.empty()) {
                g.norm[ri] = norms_[ri].backward(grad, mode);
                grad = g.norm[ri].grad_x;
            }
        }
        g.dense[ri] = dense_backward(grad, dense_in_[ri], dense_[ri]);
        grad = g.dense[ri].grad_x;
    }
    g.grad_input = std::move(grad);
    return g;
}

void Model::apply(const Grads& grads, double lr, double momentum) {
    for (size_t i = 0; i < dense_.size(); ++i) {
        sgd_momentum_step(dense_[i].w, dense_[i].vel_w, grads.dense[i].grad_w, lr, momentum);
        sgd_momentum_step(dense_[i].b, dense_[i].vel_b, grads.dense[i].grad_b, lr, momentum);
    }
    for (size_t i = 0; i < norms_.size(); ++i) {
        sgd_momentum_step(norms_[i].gamma(), vel_gamma_[i], grads.norm[i].grad_gamma, lr,
                          momentum);
        sgd_momentum_step(norms_[i].beta(), vel_beta_[i], grads.norm[i].grad_beta, lr,
                          momentum);
    }
}

Matrix Model::predict(const Matrix& x) const {
    Matrix cur = x;
    for (size_t i = 0; i + 1 < dense_.size(); ++i) {
        cur = dense_forward(cur, dense_[i]);
        if (!norms_.empty()) cur = norms_[i].predict(cur);
        cur = relu_forward(cur);
    }
    return dense_forward(cur, dense_.back());
}

std::pair<double, double> Model::evaluate(const Matrix& features,
                                          const std::vector<int>& labels) const {
    Matrix logits = predict(features);
    auto [loss, grad] = softmax_xent(logits, labels);
    (void)grad;
    int correct = 0;
    for (int j = 0; j < logits.cols(); ++j) {
        int arg = 0;
        for (int k = 1; k < logits.rows(); ++k)
            if (logits(k, j) > logits(arg, j)) arg = k;
        if (arg == labels[j]) ++correct;
    }
    return {loss, static_cast<double>(correct) / logits.cols()};
}

std::optional<Matrix> Model::last_norm_correlation(const Matrix& x) const {
    if (norms_.empty()) return std::nullopt;
    Matrix cur = x;
    for (size_t i = 0; i + 1 < dense_.size(); ++i) {
        cur = dense_forward(cur, dense_[i]);
        if (i + 1 == norms_.size()) return correlation_of(norms_[i].pre_affine_predict(cur));
        cur = norms_[i].predict(cur);
        cur = relu_forward(cur);
    }
    return std::nullopt;
}

std::optional<double> Model::last_norm_offdiag(const Matrix& x) const {
    auto corr = last_norm_correlation(x);
    if (!corr) return std::nullopt;
    return mean_abs_offdiag(*corr);
}

void Model::save(std::ostream& out) const {
    out << "swbnlab-model 1\n";
    out << "input_dim " << spec_.input_dim << '\n';
    out << "classes " << spec_.classes << '\n';
    out << "hidden";
    for (int h : spec_.hidden) out << ' ' << h;
    out << '\n';
    out << "norm_kind " << (spec_.norm ? norm_kind_name(*spec_.norm) : "none") << '\n';
    out << "swbn_alpha " << fmt17(spec_.swbn_alpha) << '\n';
    out << "iternorm_iters " << spec_.iternorm_iters << '\n';
    for (size_t i = 0; i < dense_.size(); ++i) {
        out << "dense " << dense_[i].w.rows() << ' ' << dense_[i].w.cols() << '\n';
        write_values(out, "weights", dense_[i].w.data(), dense_[i].w.size());
        write_values(out, "bias", dense_[i].b.data(), dense_[i].b.size());
        if (i < norms_.size()) norms_[i].save(out);
    }
}

void Model::save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    save(f);
}

Model Model::load(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "swbnlab-model" || version != 1)
        throw std::runtime_error("not a model checkpoint (bad header)");
    ModelSpec spec;
    std::string tag, line;
    in >> tag >> spec.input_dim;
    in >> tag >> spec.classes;
    in >> tag;  // "hidden"
    std::getline(in, line);
    std::istringstream hs(line);
    int h;
    while (hs >> h) spec.hidden.push_back(h);
    std::string kind;
    in >> tag >> kind;
    if (kind != "none") spec.norm = parse_norm_kind(kind);
    in >> tag >> spec.swbn_alpha;
    in >> tag >> spec.iternorm_iters;

    Model m(spec);
    int layer_count = static_cast<int>(spec.hidden.size()) + 1;
    for (int i = 0; i < layer_count; ++i) {
        int out = 0, cols = 0;
        in >> tag >> out >> cols;
        if (tag != "dense") throw std::runtime_error("model checkpoint: expected dense block");
        DenseLayer layer;
        layer.w = Matrix(out, cols);
        layer.b.assign(out, 0.0);
        layer.vel_w = Matrix(out, cols);
        layer.vel_b.assign(out, 0.0);
        read_values(in, "weights", layer.w.data(), layer.w.size());
        read_values(in, "bias", layer.b.data(), layer.b.size());
        m.dense_.push_back(std::move(layer));
        if (spec.norm && i < layer_count - 1) {
            m.norms_.push_back(NormLayer::load(in));
            m.vel_gamma_.emplace_back(out, 0.0);
            m.vel_beta_.emplace_back(out, 0.0);
        }
    }
    if (!in) throw std::runtime_error("model checkpoint: truncated file");
    return m;
}

Model Model::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return load(f);
}

std::vector<MetricsRow> train(const ModelSpec& spec, const Dataset& train_set,
                              const Dataset& test_set, const TrainConfig& cfg,
                              Model* out_model) {
    using clock = std::chrono::steady_clock;
    Model model(spec, cfg.seed);
    std::vector<MetricsRow> rows;

    // Off-diagonal metric uses a fixed prefix of the test split.
    const int probe_n = std::min(test_set.size(), 2048);
    std::vector<int> probe_idx(probe_n);
    for (int i = 0; i < probe_n; ++i) probe_idx[i] = i;
    Matrix probe = gather_columns(test_set.features, probe_idx);

    auto record = [&](int epoch, double elapsed_ms) {
        for (const auto* ds : {&train_set, &test_set}) {
            auto [loss, acc] = model.evaluate(ds->features, ds->labels);
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged at epoch " +
                                         std::to_string(epoch) + " (" + ds->split + " eval)");
            MetricsRow row;
            row.epoch = epoch;
            row.split = ds->split.empty() ? (ds == &train_set ? "train" : "test") : ds->split;
            row.loss = loss;
            row.accuracy = acc;
            row.mean_abs_offdiag_lastnorm = model.last_norm_offdiag(probe);
            row.elapsed_ms = elapsed_ms;
            row.seed = cfg.seed;
            rows.push_back(std::move(row));
        }
    };

    record(0, 0.0);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto t0 = clock::now();
        double lr = cfg.lr * std::pow(0.5, (epoch - 1) / cfg.lr_halving_period);
        uint64_t shuffle_seed = cfg.seed * 1000003ULL + static_cast<uint64_t>(epoch);
        auto epoch_batches = batches(train_set.size(), cfg.batch_size, shuffle_seed, true);
        int step = 0;
        for (const auto& idx : epoch_batches) {
            ++step;
            if (idx.size() < 2) {
                std::cerr << "warning: dropping final batch of size 1\n";
                continue;
            }
            Matrix xb = gather_columns(train_set.features, idx);
            std::vector<int> yb = gather_labels(train_set.labels, idx);
            Matrix logits = model.forward_train(xb);
            auto [loss, grad] = softmax_xent(logits, yb);
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged at epoch " +
                                         std::to_string(epoch) + " step " +
                                         std::to_string(step));
            model.apply(model.backward(grad, cfg.backward_mode), lr, cfg.momentum);
        }
        double elapsed_ms =
            std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        record(epoch, elapsed_ms);
    }
    if (out_model) *out_model = std::move(model);
    return rows;
}

double fd_gradcheck(const ModelSpec& spec, uint64_t seed, const Matrix& x,
                    const std::vector<int>& labels) {
    ModelSpec frozen = spec;
    frozen.swbn_alpha = 0.0;  // W must stay fixed so the forward map is pure
    Model base(frozen, seed);
    base.set_swbn_alpha(0.0);

    auto loss_at = [&](const Model& m) {
        Model copy = m;
        Matrix logits = copy.forward_train(x);
        return softmax_xent(logits, labels).first;
    };

    Model work = base;
    Matrix logits = work.forward_train(x);
    auto [loss, grad_logits] = softmax_xent(logits, labels);
    (void)loss;
    Model::Grads grads = work.backward(grad_logits, BackwardMode::Exact);

    const double h = 1e-6;
    double max_rel = 0.0;
    auto check = [&](double analytic, double* slot) {
        double orig = *slot;
        *slot = orig + h;
        double lp = loss_at(base);
        *slot = orig - h;
        double lm = loss_at(base);
        *slot = orig;
        double numeric = (lp - lm) / (2.0 * h);
        double rel = std::fabs(analytic - numeric) / std::max(1e-8, std::fabs(numeric));
        max_rel = std::max(max_rel, rel);
    };

    auto& dense = base.dense_layers();
    for (size_t i = 0; i < dense.size(); ++i) {
        for (size_t k = 0; k < dense[i].w.size(); ++k)
            check(grads.dense[i].grad_w.data()[k], dense[i].w.data() + k);
        for (size_t k = 0; k < dense[i].b.size(); ++k)
            check(grads.dense[i].grad_b[k], dense[i].b.data() + k);
    }
    auto& norms = base.norm_layers();
    for (size_t i = 0; i < norms.size(); ++i) {
        for (size_t k = 0; k < norms[i].gamma().size(); ++k)
            check(grads.norm[i].grad_gamma[k], norms[i].gamma().data() + k);
        for (size_t k = 0; k < norms[i].beta().size(); ++k)
            check(grads.norm[i].grad_beta[k], norms[i].beta().data() + k);
    }
    // Input gradient via a perturbed copy of x.
    Matrix xp = x;
    for (size_t k = 0; k < xp.size(); ++k) {
        double orig = xp.data()[k];
        xp.data()[k] = orig + h;
        Model c1 = base;
        double lp = softmax_xent(c1.forward_train(xp), labels).first;
        xp.data()[k] = orig - h;
        Model c2 = base;
        double lm = softmax_xent(c2.forward_train(xp), labels).first;
        xp.data()[k] = orig;
        double numeric = (lp - lm) / (2.0 * h);
        double rel = std::fabs(grads.grad_input.data()[k] - numeric) /
                     std::max(1e-8, std::fabs(numeric));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "epoch,split,loss,accuracy,mean_abs_offdiag_lastnorm,elapsed_ms,seed\n";
    for (const auto& r : rows) {
        f << r.epoch << ',' << r.split << ',' << fmt17(r.loss) << ',' << fmt17(r.accuracy)
          << ',';
        if (r.mean_abs_offdiag_lastnorm) f << fmt17(*r.mean_abs_offdiag_lastnorm);
        f << ',' << fmt17(r.elapsed_ms) << ',' << r.seed << '\n';
    }
}

}  // namespace swbn
