#include "swbn/norm_layer.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
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
    if (got != tag) throw std::runtime_error("checkpoint: expected '" + tag + "', got '" + got + "'");
    for (size_t i = 0; i < count; ++i)
        if (!(in >> p[i])) throw std::runtime_error("checkpoint: truncated '" + tag + "' block");
}

}  // namespace

const char* norm_kind_name(NormKind k) {
    switch (k) {
        case NormKind::BN: return "bn";
        case NormKind::SwbnKL: return "swbn-kl";
        case NormKind::SwbnFro: return "swbn-fro";
        case NormKind::IterNorm: return "iternorm";
    }
    return "?";
}

NormKind parse_norm_kind(const std::string& name) {
    if (name == "bn") return NormKind::BN;
    if (name == "swbn-kl") return NormKind::SwbnKL;
    if (name == "swbn-fro") return NormKind::SwbnFro;
    if (name == "iternorm") return NormKind::IterNorm;
    throw std::invalid_argument("unknown norm kind: " + name);
}

NormLayer::NormLayer(NormKind kind, int d, double swbn_alpha, int iternorm_iters)
    : kind_(kind) {
    switch (kind) {
        case NormKind::BN:
            bn_ = make_bn_state(d);
            break;
        case NormKind::SwbnKL:
            swbn_ = make_swbn_state(d, Criterion::KL, swbn_alpha);
            break;
        case NormKind::SwbnFro:
            swbn_ = make_swbn_state(d, Criterion::Fro, swbn_alpha);
            break;
        case NormKind::IterNorm:
            iternorm_ = make_iternorm_state(d, iternorm_iters);
            break;
    }
}

int NormLayer::dim() const {
    if (swbn_) return swbn_->d;
    if (bn_) return bn_->d;
    return iternorm_->d;
}

Matrix NormLayer::forward_train(const Matrix& x, OpCounter* counter) {
    if (swbn_) {
        swbn_cache_.emplace();
        return swbn::forward_train(x, *swbn_, &*swbn_cache_, counter);
    }
    if (bn_) {
        bn_cache_.emplace();
        return bn_forward_train(x, *bn_, &*bn_cache_);
    }
    iternorm_cache_.emplace();
    return iternorm_forward_train(x, *iternorm_, &*iternorm_cache_, counter);
}

LayerGrads NormLayer::backward(const Matrix& grad_out, BackwardMode mode) const {
    if (swbn_) {
        if (!swbn_cache_) throw std::logic_error("norm backward before forward");
        return swbn::backward(grad_out, *swbn_cache_, *swbn_, mode);
    }
    if (bn_) {
        if (!bn_cache_) throw std::logic_error("norm backward before forward");
        return bn_backward(grad_out, *bn_cache_, *bn_);
    }
    if (!iternorm_cache_) throw std::logic_error("norm backward before forward");
    return iternorm_backward(grad_out, *iternorm_cache_, *iternorm_);
}

Matrix NormLayer::predict(const Matrix& x) const {
    if (swbn_) return forward_predict(x, *swbn_);
    if (bn_) return bn_predict(x, *bn_);
    return iternorm_predict(x, *iternorm_);
}

Matrix NormLayer::pre_affine_predict(const Matrix& x) const {
    if (swbn_) return predict_whitened(x, *swbn_);
    if (bn_) return bn_standardized_predict(x, *bn_);
    return iternorm_whitened_predict(x, *iternorm_);
}

std::vector<double>& NormLayer::gamma() {
    if (swbn_) return swbn_->gamma;
    if (bn_) return bn_->gamma;
    return iternorm_->gamma;
}

std::vector<double>& NormLayer::beta() {
    if (swbn_) return swbn_->beta;
    if (bn_) return bn_->beta;
    return iternorm_->beta;
}

void NormLayer::save(std::ostream& out) const {
    out << "norm " << norm_kind_name(kind_) << '\n';
    const int d = dim();
    out << "d " << d << '\n';
    if (swbn_) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", swbn_->alpha);
        out << "alpha " << buf << '\n';
        std::snprintf(buf, sizeof(buf), "%.17g", swbn_->eta);
        out << "eta " << buf << '\n';
        std::snprintf(buf, sizeof(buf), "%.17g", swbn_->eps);
        out << "eps " << buf << '\n';
        write_values(out, "W", swbn_->w.data(), swbn_->w.size());
        write_values(out, "gamma", swbn_->gamma.data(), d);
        write_values(out, "beta", swbn_->beta.data(), d);
        write_values(out, "mu_e", swbn_->mu_e.data(), d);
        write_values(out, "v_e", swbn_->v_e.data(), d);
    } else if (bn_) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", bn_->eta);
        out << "eta " << buf << '\n';
        std::snprintf(buf, sizeof(buf), "%.17g", bn_->eps);
        out << "eps " << buf << '\n';
        write_values(out, "gamma", bn_->gamma.data(), d);
        write_values(out, "beta", bn_->beta.data(), d);
        write_values(out, "mu_e", bn_->mu_e.data(), d);
        write_values(out, "v_e", bn_->v_e.data(), d);
    } else {
        char buf[40];
        out << "iterations " << iternorm_->iterations << '\n';
        std::snprintf(buf, sizeof(buf), "%.17g", iternorm_->eta);
        out << "eta " << buf << '\n';
        std::snprintf(buf, sizeof(buf), "%.17g", iternorm_->eps);
        out << "eps " << buf << '\n';
        write_values(out, "w_e", iternorm_->w_e.data(), iternorm_->w_e.size());
        write_values(out, "gamma", iternorm_->gamma.data(), d);
        write_values(out, "beta", iternorm_->beta.data(), d);
        write_values(out, "mu_e", iternorm_->mu_e.data(), d);
    }
}

NormLayer NormLayer::load(std::istream& in) {
    std::string tag, kind_name;
    in >> tag >> kind_name;
    if (tag != "norm") throw std::runtime_error("checkpoint: expected 'norm' block");
    NormKind kind = parse_norm_kind(kind_name);
    std::string dtag;
    int d = 0;
    in >> dtag >> d;
    if (dtag != "d" || d < 1) throw std::runtime_error("checkpoint: bad norm dimension");

    NormLayer layer;
    layer.kind_ = kind;
    if (kind == NormKind::SwbnKL || kind == NormKind::SwbnFro) {
        double alpha, eta, eps;
        std::string t;
        in >> t >> alpha;
        in >> t >> eta;
        in >> t >> eps;
        SwbnState s = make_swbn_state(
            d, kind == NormKind::SwbnKL ? Criterion::KL : Criterion::Fro, alpha, eta, eps);
        read_values(in, "W", s.w.data(), s.w.size());
        read_values(in, "gamma", s.gamma.data(), d);
        read_values(in, "beta", s.beta.data(), d);
        read_values(in, "mu_e", s.mu_e.data(), d);
        read_values(in, "v_e", s.v_e.data(), d);
        layer.swbn_ = std::move(s);
    } else if (kind == NormKind::BN) {
        double eta, eps;
        std::string t;
        in >> t >> eta;
        in >> t >> eps;
        BnState s = make_bn_state(d, eta, eps);
        read_values(in, "gamma", s.gamma.data(), d);
        read_values(in, "beta", s.beta.data(), d);
        read_values(in, "mu_e", s.mu_e.data(), d);
        read_values(in, "v_e", s.v_e.data(), d);
        layer.bn_ = std::move(s);
    } else {
        int iters;
        double eta, eps;
        std::string t;
        in >> t >> iters;
        in >> t >> eta;
        in >> t >> eps;
        IterNormState s = make_iternorm_state(d, iters, eta, eps);
        read_values(in, "w_e", s.w_e.data(), s.w_e.size());
        read_values(in, "gamma", s.gamma.data(), d);
        read_values(in, "beta", s.beta.data(), d);
        read_values(in, "mu_e", s.mu_e.data(), d);
        layer.iternorm_ = std::move(s);
    }
    if (!in) throw std::runtime_error("checkpoint: truncated norm block");
    return layer;
}

}  // namespace swbn
