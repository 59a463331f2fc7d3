#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "swbn/baselines.hpp"
#include "swbn/swbn_layer.hpp"

namespace swbn {

enum class NormKind { BN, SwbnKL, SwbnFro, IterNorm };

const char* norm_kind_name(NormKind k);
NormKind parse_norm_kind(const std::string& name);

// Tagged union over the three layer families, presenting one
// forward/backward/predict surface to the trainer.
class NormLayer {
public:
    NormLayer(NormKind kind, int d, double swbn_alpha = 1e-5, int iternorm_iters = 5);

    NormKind kind() const { return kind_; }
    int dim() const;

    Matrix forward_train(const Matrix& x, OpCounter* counter = nullptr);
    LayerGrads backward(const Matrix& grad_out, BackwardMode mode) const;
    Matrix predict(const Matrix& x) const;
    // Prediction-path features before gamma/beta (whitened for SWBN and
    // IterNorm, standardized for BN).
    Matrix pre_affine_predict(const Matrix& x) const;

    std::vector<double>& gamma();
    std::vector<double>& beta();

    // Checkpoint block, full-precision decimal text; round-trips exactly.
    void save(std::ostream& out) const;
    static NormLayer load(std::istream& in);

    const SwbnState& swbn_state() const { return *swbn_; }
    SwbnState& swbn_state() { return *swbn_; }
    const BnState& bn_state() const { return *bn_; }
    const IterNormState& iternorm_state() const { return *iternorm_; }

private:
    NormLayer() = default;

    NormKind kind_ = NormKind::BN;
    std::optional<SwbnState> swbn_;
    std::optional<BnState> bn_;
    std::optional<IterNormState> iternorm_;
    // Per-forward intermediates consumed by backward.
    std::optional<BackpropCache> swbn_cache_;
    std::optional<BnCache> bn_cache_;
    std::optional<IterNormCache> iternorm_cache_;
};

}  // namespace swbn
