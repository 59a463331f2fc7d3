#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swbn/data.hpp"
#include "swbn/matrix.hpp"
#include "swbn/norm_layer.hpp"

namespace swbn {

struct DenseLayer {
    Matrix w;                    // out x in
    std::vector<double> b;
    Matrix vel_w;                // momentum buffers
    std::vector<double> vel_b;
};

struct DenseGrads {
    Matrix grad_x;
    Matrix grad_w;
    std::vector<double> grad_b;
};

Matrix dense_forward(const Matrix& x, const DenseLayer& layer);
DenseGrads dense_backward(const Matrix& grad_y, const Matrix& x, const DenseLayer& layer);

Matrix relu_forward(const Matrix& x);
Matrix relu_backward(const Matrix& grad_y, const Matrix& pre_activation);

// Batch-averaged softmax cross-entropy; returns the loss and the gradient
// with respect to the logits. Softmax is stabilized by max subtraction.
std::pair<double, Matrix> softmax_xent(const Matrix& logits, const std::vector<int>& labels);

// v <- momentum*v + grad; p <- p - lr*v
void sgd_momentum_step(Matrix& params, Matrix& velocity, const Matrix& grads, double lr,
                       double momentum);
void sgd_momentum_step(std::vector<double>& params, std::vector<double>& velocity,
                       const std::vector<double>& grads, double lr, double momentum);

// Hidden layers get dense -> [norm] -> relu; the output layer is dense only.
struct ModelSpec {
    int input_dim = 0;
    std::vector<int> hidden;
    int classes = 0;
    std::optional<NormKind> norm;   // before each hidden ReLU
    double swbn_alpha = 1e-5;
    int iternorm_iters = 5;
};

struct TrainConfig {
    int epochs = 10;
    int batch_size = 128;
    double lr = 0.1;
    double momentum = 0.9;
    int lr_halving_period = 20;    // epochs per halving
    uint64_t seed = 1;
    BackwardMode backward_mode = BackwardMode::Faithful;
};

struct MetricsRow {
    int epoch = 0;
    std::string split;
    double loss = 0.0;
    double accuracy = 0.0;
    std::optional<double> mean_abs_offdiag_lastnorm;
    double elapsed_ms = 0.0;
    uint64_t seed = 0;
};

class Model {
public:
    Model(const ModelSpec& spec, uint64_t seed);

    const ModelSpec& spec() const { return spec_; }

    // Training-mode forward; fills per-layer caches and updates norm-layer
    // state (SWBN W, running statistics).
    Matrix forward_train(const Matrix& x, OpCounter* counter = nullptr);
    // Backward through the cached pass; fills grads, applies no update.
    struct Grads {
        std::vector<DenseGrads> dense;
        std::vector<LayerGrads> norm;   // parallel to norm layers
        Matrix grad_input;
    };
    Grads backward(const Matrix& grad_logits, BackwardMode mode);
    void apply(const Grads& grads, double lr, double momentum);

    Matrix predict(const Matrix& x) const;
    std::pair<double, double> evaluate(const Matrix& features,
                                       const std::vector<int>& labels) const;
    // Correlation of the last norm layer's pre-gamma/beta prediction
    // features; empty when the model has no norm layers.
    std::optional<double> last_norm_offdiag(const Matrix& x) const;
    std::optional<Matrix> last_norm_correlation(const Matrix& x) const;

    std::vector<DenseLayer>& dense_layers() { return dense_; }
    std::vector<NormLayer>& norm_layers() { return norms_; }
    void set_swbn_alpha(double alpha);

    void save(std::ostream& out) const;
    void save(const std::string& path) const;
    static Model load(std::istream& in);
    static Model load_file(const std::string& path);

private:
    explicit Model(const ModelSpec& spec) : spec_(spec) {}

    ModelSpec spec_;
    std::vector<DenseLayer> dense_;        // hidden layers + output layer
    std::vector<NormLayer> norms_;         // one per hidden layer if spec.norm
    std::vector<std::vector<double>> vel_gamma_, vel_beta_;
    // caches from the last forward_train
    std::vector<Matrix> dense_in_, relu_pre_;
};

// Deterministic for a fixed seed: seeded init, seeded per-epoch shuffles.
// Throws std::runtime_error on divergence (non-finite loss).
std::vector<MetricsRow> train(const ModelSpec& spec, const Dataset& train_set,
                              const Dataset& test_set, const TrainConfig& cfg,
                              Model* out_model = nullptr);

// Max relative error between analytic and central-difference gradients over
// all parameters and inputs. SWBN alpha is forced to 0 for the check and
// Exact backward mode is used.
double fd_gradcheck(const ModelSpec& spec, uint64_t seed, const Matrix& x,
                    const std::vector<int>& labels);

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

}  // namespace swbn
