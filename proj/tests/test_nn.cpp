#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "swbn/nn.hpp"

using swbn::Matrix;

TEST_CASE("norm kind names round trip") {
    for (const char* name : {"bn", "swbn-kl", "swbn-fro", "iternorm"}) {
        CHECK(std::string(swbn::norm_kind_name(swbn::parse_norm_kind(name))) == name);
    }
    CHECK_THROWS_AS(swbn::parse_norm_kind("layer-norm"), std::invalid_argument);
}

TEST_CASE("norm layer checkpoint round trips at full precision") {
    swbn::Rng rng(2);
    for (swbn::NormKind kind : {swbn::NormKind::BN, swbn::NormKind::SwbnKL,
                                swbn::NormKind::SwbnFro, swbn::NormKind::IterNorm}) {
        swbn::NormLayer layer(kind, 3, 1e-3, 5);
        for (int step = 0; step < 3; ++step)
            layer.forward_train(oracle::random_matrix(3, 16, rng));
        layer.gamma()[1] = rng.normal();
        layer.beta()[2] = rng.normal();

        std::stringstream ss;
        layer.save(ss);
        swbn::NormLayer back = swbn::NormLayer::load(ss);
        CHECK(back.kind() == kind);
        Matrix x = oracle::random_matrix(3, 4, rng);
        CHECK(oracle::max_abs_diff(layer.predict(x), back.predict(x)) == 0.0);
    }
}

TEST_CASE("dense layer basics") {
    swbn::DenseLayer layer;
    layer.w = Matrix::identity(3);
    layer.b.assign(3, 0.0);
    Matrix x(3, 2, {1, 2, 3, 4, 5, 6});
    Matrix y = swbn::dense_forward(x, layer);
    CHECK(oracle::max_abs_diff(y, x) == 0.0);

    swbn::Rng rng(3);
    swbn::DenseLayer dl;
    dl.w = oracle::random_matrix(3, 4, rng);
    dl.b = {rng.normal(), rng.normal(), rng.normal()};
    Matrix input = oracle::random_matrix(4, 5, rng);
    Matrix out = swbn::dense_forward(input, dl);
    Matrix grad_y = oracle::random_matrix(3, 5, rng);
    swbn::DenseGrads grads = swbn::dense_backward(grad_y, input, dl);

    // b gradient equals row sums of grad_y
    for (int k = 0; k < 3; ++k) {
        double row = 0.0;
        for (int j = 0; j < 5; ++j) row += grad_y(k, j);
        CHECK(grads.grad_b[k] == doctest::Approx(row).epsilon(1e-12));
    }

    // weight gradient against central differences
    auto loss = [&](const Matrix& w) {
        swbn::DenseLayer probe = dl;
        probe.w = w;
        Matrix o = swbn::dense_forward(input, probe);
        double l = 0.0;
        for (size_t i = 0; i < o.size(); ++i) l += grad_y.data()[i] * o.data()[i];
        return l;
    };
    Matrix g_fd = oracle::fd_matrix_grad(loss, dl.w);
    CHECK(oracle::rel_fro_error(grads.grad_w, g_fd) < 1e-6);
    (void)out;
}

TEST_CASE("relu and softmax cross-entropy") {
    Matrix pre(2, 2, {-1, 2, 0, 3});
    Matrix act = swbn::relu_forward(pre);
    CHECK(act(0, 0) == 0.0);
    CHECK(act(0, 1) == 2.0);
    CHECK(act(1, 0) == 0.0);
    Matrix grad = swbn::relu_backward(Matrix(2, 2, {5, 5, 5, 5}), pre);
    CHECK(grad(0, 0) == 0.0);
    CHECK(grad(0, 1) == 5.0);
    CHECK(grad(1, 0) == 0.0);

    Matrix logits(4, 2);
    auto [loss_u, g_u] = swbn::softmax_xent(logits, {0, 3});
    CHECK(loss_u == doctest::Approx(std::log(4.0)));
    (void)g_u;

    Matrix confident(3, 1, {50, 0, 0});
    auto [loss_c, g_c] = swbn::softmax_xent(confident, {0});
    CHECK(loss_c < 1e-12);
    (void)g_c;

    CHECK_THROWS_AS(swbn::softmax_xent(logits, {0, 4}), std::out_of_range);

    // gradient vs finite differences
    swbn::Rng rng(5);
    Matrix z = oracle::random_matrix(3, 4, rng);
    std::vector<int> labels = {0, 2, 1, 1};
    auto f = [&](const Matrix& m) { return swbn::softmax_xent(m, labels).first; };
    Matrix g_fd = oracle::fd_matrix_grad(f, z);
    Matrix g = swbn::softmax_xent(z, labels).second;
    CHECK(oracle::rel_fro_error(g, g_fd) < 1e-6);
}

TEST_CASE("sgd momentum step") {
    std::vector<double> p = {1.0}, v = {0.0}, g = {2.0};
    swbn::sgd_momentum_step(p, v, g, 0.1, 0.0);
    CHECK(p[0] == doctest::Approx(0.8));

    p = {0.0};
    v = {0.0};
    swbn::sgd_momentum_step(p, v, {0.0}, 0.1, 0.9);
    CHECK(p[0] == 0.0);

    // two steps, constant grad: total update lr*g*(1 + 1.9)
    p = {0.0};
    v = {0.0};
    swbn::sgd_momentum_step(p, v, {1.0}, 0.1, 0.9);
    swbn::sgd_momentum_step(p, v, {1.0}, 0.1, 0.9);
    CHECK(p[0] == doctest::Approx(-0.1 * (1.0 + 1.9)));
}

TEST_CASE("zero-epoch training emits only the initial evaluation") {
    auto [tr, te] = swbn::split_dataset(swbn::make_blobs(4, 96, 2, 3.0, 1), 64);
    swbn::ModelSpec spec;
    spec.input_dim = 4;
    spec.hidden = {8};
    spec.classes = 2;
    swbn::TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 1;
    auto rows = swbn::train(spec, tr, te, cfg);
    REQUIRE(rows.size() == 2);  // train + test rows at epoch 0
    CHECK(rows[0].epoch == 0);
    CHECK(rows[0].split == "train");
    CHECK(rows[1].split == "test");
}

TEST_CASE("training is deterministic per seed") {
    auto [tr, te] = swbn::split_dataset(swbn::make_blobs(4, 192, 2, 3.0, 1), 128);
    swbn::ModelSpec spec;
    spec.input_dim = 4;
    spec.hidden = {8};
    spec.classes = 2;
    spec.norm = swbn::NormKind::SwbnKL;
    spec.swbn_alpha = 1e-4;
    swbn::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 32;
    cfg.seed = 9;
    auto r1 = swbn::train(spec, tr, te, cfg);
    auto r2 = swbn::train(spec, tr, te, cfg);
    REQUIRE(r1.size() == r2.size());
    for (size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].loss == r2[i].loss);
        CHECK(r1[i].accuracy == r2[i].accuracy);
    }
}

TEST_CASE("blob classification reaches high accuracy") {
    auto [tr, te] = swbn::split_dataset(swbn::make_blobs(4, 768, 2, 3.0, 3), 512);
    swbn::ModelSpec spec;
    spec.input_dim = 4;
    spec.hidden = {16};
    spec.classes = 2;
    swbn::TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 64;
    cfg.lr = 0.1;
    cfg.momentum = 0.9;
    cfg.seed = 5;
    auto rows = swbn::train(spec, tr, te, cfg);
    CHECK(rows.back().split == "test");
    CHECK(rows.back().accuracy > 0.95);
}

TEST_CASE("identical seeds give identical initial parameters") {
    swbn::ModelSpec spec;
    spec.input_dim = 6;
    spec.hidden = {5};
    spec.classes = 3;
    swbn::Model a(spec, 11), b(spec, 11), c(spec, 12);
    CHECK(oracle::max_abs_diff(a.dense_layers()[0].w, b.dense_layers()[0].w) == 0.0);
    CHECK(oracle::max_abs_diff(a.dense_layers()[0].w, c.dense_layers()[0].w) != 0.0);
    // scaled-uniform bound
    double bound = std::sqrt(6.0 / (6 + 5));
    for (size_t i = 0; i < a.dense_layers()[0].w.size(); ++i)
        CHECK(std::fabs(a.dense_layers()[0].w.data()[i]) <= bound);
}

TEST_CASE("full-model gradient checks") {
    swbn::Rng rng(7);
    Matrix x = oracle::random_matrix(4, 6, rng);
    std::vector<int> labels = {0, 1, 2, 0, 1, 2};

    swbn::ModelSpec plain;
    plain.input_dim = 4;
    plain.hidden = {3};
    plain.classes = 3;
    CHECK(swbn::fd_gradcheck(plain, 1, x, labels) < 1e-6);

    swbn::ModelSpec with_swbn = plain;
    with_swbn.norm = swbn::NormKind::SwbnKL;
    CHECK(swbn::fd_gradcheck(with_swbn, 2, x, labels) < 1e-5);

    swbn::ModelSpec with_bn = plain;
    with_bn.norm = swbn::NormKind::BN;
    CHECK(swbn::fd_gradcheck(with_bn, 3, x, labels) < 1e-5);
}

TEST_CASE("model checkpoint round trips") {
    auto [tr, te] = swbn::split_dataset(swbn::make_blobs(4, 96, 2, 3.0, 6), 64);
    swbn::ModelSpec spec;
    spec.input_dim = 4;
    spec.hidden = {8};
    spec.classes = 2;
    spec.norm = swbn::NormKind::SwbnFro;
    spec.swbn_alpha = 1e-4;
    swbn::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.seed = 8;
    swbn::Model model(spec, cfg.seed);
    swbn::train(spec, tr, te, cfg, &model);

    std::stringstream ss;
    model.save(ss);
    swbn::Model back = swbn::Model::load(ss);
    swbn::Rng probe_rng(9);
    Matrix x = oracle::random_matrix(4, 5, probe_rng);
    Matrix p1 = model.predict(x);
    Matrix p2 = back.predict(x);
    CHECK(oracle::max_abs_diff(p1, p2) == 0.0);
}

TEST_CASE("metrics csv schema") {
    swbn::MetricsRow row;
    row.epoch = 1;
    row.split = "test";
    row.loss = 0.5;
    row.accuracy = 0.875;
    row.mean_abs_offdiag_lastnorm = 0.25;
    row.elapsed_ms = 1.5;
    row.seed = 7;
    swbn::write_metrics_csv({row}, "/tmp/swbn_test_metrics.csv");
    std::ifstream f("/tmp/swbn_test_metrics.csv");
    std::string header, line;
    std::getline(f, header);
    std::getline(f, line);
    CHECK(header == "epoch,split,loss,accuracy,mean_abs_offdiag_lastnorm,elapsed_ms,seed");
    CHECK(line == "1,test,0.5,0.875,0.25,1.5,7");
}
