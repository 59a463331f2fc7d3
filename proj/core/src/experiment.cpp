#include "swbn/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "swbn/baselines.hpp"
#include "swbn/criteria.hpp"
#include "swbn/data.hpp"
#include "swbn/nn.hpp"
#include "swbn/norm_layer.hpp"

namespace swbn {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg, int classes) {
    std::string kind = cfg.get("data", "dataset");
    if (kind == "mnist-idx") {
        Dataset tr, te;
        tr.features = load_idx_images(cfg.get("data", "train_images"));
        tr.labels = load_idx_labels(cfg.get("data", "train_labels"));
        te.features = load_idx_images(cfg.get("data", "test_images"));
        te.labels = load_idx_labels(cfg.get("data", "test_labels"));
        tr.classes = te.classes = classes;
        tr.split = "train";
        te.split = "test";
        auto cap = [](Dataset& ds, int n) {
            if (n <= 0 || n >= ds.size()) return;
            std::vector<int> idx(n);
            for (int i = 0; i < n; ++i) idx[i] = i;
            ds.features = gather_columns(ds.features, idx);
            ds.labels.resize(n);
        };
        cap(tr, std::stoi(cfg.get_or("data", "train_n", "0")));
        cap(te, std::stoi(cfg.get_or("data", "test_n", "0")));
        if (tr.labels.size() != static_cast<size_t>(tr.features.cols()) ||
            te.labels.size() != static_cast<size_t>(te.features.cols()))
            throw std::runtime_error("image/label counts disagree");
        return {std::move(tr), std::move(te)};
    }
    if (kind == "digits-idx") {
        Matrix src = load_idx_images(cfg.get("data", "src_images"));
        std::vector<int> labels = load_idx_labels(cfg.get("data", "src_labels"));
        auto [tr, te] = expand_digits(src, labels, cfg.get_int("data", "train_n"),
                                      cfg.get_int("data", "test_n"),
                                      static_cast<uint64_t>(cfg.get_int_or("data", "data_seed", 7)));
        return {std::move(tr), std::move(te)};
    }
    if (kind == "blobs") {
        int d = cfg.get_int("data", "d");
        double sep = cfg.get_double_or("data", "separation", 3.0);
        uint64_t seed = static_cast<uint64_t>(cfg.get_int_or("data", "data_seed", 7));
        int train_n = cfg.get_int("data", "train_n");
        int test_n = cfg.get_int("data", "test_n");
        Dataset all = make_blobs(d, train_n + test_n, classes, sep, seed);
        return split_dataset(all, train_n);
    }
    throw ConfigError("config: unsupported dataset kind for training: " + kind);
}

const std::vector<std::string> kTrainAllowed = {
    "model.norm", "model.hidden", "model.classes", "model.swbn_alpha", "model.iternorm_iters",
    "train.epochs", "train.batch_size", "train.lr", "train.momentum",
    "train.lr_halving_period", "train.seeds", "train.backward_mode",
    "data.dataset", "data.train_images", "data.train_labels", "data.test_images",
    "data.test_labels", "data.train_n", "data.test_n", "data.src_images", "data.src_labels",
    "data.d", "data.separation", "data.data_seed",
    "output.out_dir"};

const std::vector<std::string> kTrainRequired = {
    "model.norm", "model.hidden", "model.classes", "train.epochs", "train.batch_size",
    "train.lr", "train.momentum", "train.seeds", "data.dataset", "output.out_dir"};

}  // namespace

int cmd_train(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate(kTrainAllowed, kTrainRequired);
    fs::path out_dir(cfg.get("output", "out_dir"));
    fs::create_directories(out_dir);

    int classes = cfg.get_int("model", "classes");
    auto [train_set, test_set] = load_datasets(cfg, classes);

    ModelSpec base_spec;
    base_spec.input_dim = train_set.dim();
    base_spec.hidden = cfg.get_int_list("model", "hidden");
    base_spec.classes = classes;
    base_spec.swbn_alpha = cfg.get_double_or("model", "swbn_alpha", 1e-5);
    base_spec.iternorm_iters = cfg.get_int_or("model", "iternorm_iters", 5);

    TrainConfig tc;
    tc.epochs = cfg.get_int("train", "epochs");
    tc.batch_size = cfg.get_int("train", "batch_size");
    tc.lr = cfg.get_double("train", "lr");
    tc.momentum = cfg.get_double("train", "momentum");
    tc.lr_halving_period = cfg.get_int_or("train", "lr_halving_period", 20);
    std::string mode = cfg.get_or("train", "backward_mode", "faithful");
    if (mode != "faithful" && mode != "exact")
        throw ConfigError("config: train.backward_mode must be faithful or exact");
    tc.backward_mode = mode == "exact" ? BackwardMode::Exact : BackwardMode::Faithful;

    std::vector<std::string> norms = cfg.get_list("model", "norm");
    std::vector<int> seeds = cfg.get_int_list("train", "seeds");

    for (const auto& norm_name : norms) {
        ModelSpec spec = base_spec;
        if (norm_name != "none") spec.norm = parse_norm_kind(norm_name);
        std::vector<std::vector<MetricsRow>> per_seed;
        for (int seed : seeds) {
            tc.seed = static_cast<uint64_t>(seed);
            Model model(spec, tc.seed);
            auto rows = train(spec, train_set, test_set, tc, &model);
            std::string stem = norm_name + "_seed" + std::to_string(seed);
            write_metrics_csv(rows, (out_dir / ("metrics_" + stem + ".csv")).string());
            model.save((out_dir / ("model_" + stem + ".ckpt")).string());
            if (verbose)
                std::cout << "trained " << stem << ": final test acc "
                          << rows.back().accuracy << '\n';
            per_seed.push_back(std::move(rows));
        }
        if (seeds.size() > 1) {
            std::ofstream agg(out_dir / ("aggregate_" + norm_name + ".csv"),
                              std::ios::trunc);
            agg << "epoch,split,loss_mean,loss_std,accuracy_mean,accuracy_std\n";
            size_t n_rows = per_seed.front().size();
            for (size_t r = 0; r < n_rows; ++r) {
                double lm = 0, am = 0;
                for (const auto& run : per_seed) {
                    lm += run[r].loss;
                    am += run[r].accuracy;
                }
                lm /= per_seed.size();
                am /= per_seed.size();
                double lv = 0, av = 0;
                for (const auto& run : per_seed) {
                    lv += (run[r].loss - lm) * (run[r].loss - lm);
                    av += (run[r].accuracy - am) * (run[r].accuracy - am);
                }
                lv = std::sqrt(lv / (per_seed.size() - 1));
                av = std::sqrt(av / (per_seed.size() - 1));
                const auto& row = per_seed.front()[r];
                agg << row.epoch << ',' << row.split << ',' << fmt17(lm) << ',' << fmt17(lv)
                    << ',' << fmt17(am) << ',' << fmt17(av) << '\n';
            }
        }
    }
    return kExitOk;
}

int cmd_whiten_demo(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate({"data.d", "data.rho", "train.alphas", "train.criteria", "train.max_iters",
                  "train.tol", "output.out_dir"},
                 {"data.d", "data.rho", "train.alphas", "output.out_dir"});
    fs::path out_dir(cfg.get("output", "out_dir"));
    fs::create_directories(out_dir);

    int d = cfg.get_int("data", "d");
    double rho = cfg.get_double("data", "rho");
    Matrix sigma = equicorrelation(d, rho);
    int max_iters = cfg.get_int_or("train", "max_iters", 20000);
    double tol = cfg.get_double_or("train", "tol", 1e-3);

    std::vector<std::string> criteria = {"kl", "fro"};
    if (cfg.has("train", "criteria")) criteria = cfg.get_list("train", "criteria");

    for (const auto& crit_name : criteria) {
        Criterion crit = parse_criterion(crit_name);
        for (const auto& alpha_str : cfg.get_list("train", "alphas")) {
            double alpha = std::stod(alpha_str);
            auto [w, report] = whiten_iterate(sigma, crit, alpha, max_iters, tol);
            (void)w;
            std::string name = "whiten_" + crit_name + "_alpha" + alpha_str + ".csv";
            write_trajectory_csv(report, (out_dir / name).string());
            if (verbose)
                std::cout << crit_name << " alpha=" << alpha_str << ": iters "
                          << report.iterations << " final " << report.final_distance
                          << (report.converged ? " (converged)" : "") << '\n';
        }
    }
    return kExitOk;
}

int cmd_heatmap(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate({"model.checkpoint", "data.dataset", "data.rho", "data.n", "data.data_seed",
                  "data.test_images", "data.test_labels", "output.out_dir"},
                 {"model.checkpoint", "data.dataset", "data.n", "output.out_dir"});
    fs::path out_dir(cfg.get("output", "out_dir"));
    fs::create_directories(out_dir);

    Model model = Model::load_file(cfg.get("model", "checkpoint"));
    int n = cfg.get_int("data", "n");

    Matrix x(1, 1);
    std::string kind = cfg.get("data", "dataset");
    if (kind == "gaussian") {
        double rho = cfg.get_double("data", "rho");
        uint64_t seed = static_cast<uint64_t>(cfg.get_int_or("data", "data_seed", 11));
        x = gen_correlated_gaussian(model.spec().input_dim, n,
                                    equicorrelation(model.spec().input_dim, rho), seed);
    } else if (kind == "mnist-idx") {
        Matrix all = load_idx_images(cfg.get("data", "test_images"));
        std::vector<int> idx(std::min(n, all.cols()));
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        x = gather_columns(all, idx);
    } else {
        throw ConfigError("config: unsupported dataset kind for heatmap: " + kind);
    }

    auto corr = model.last_norm_correlation(x);
    if (!corr) throw std::runtime_error("checkpointed model has no norm layer");
    write_csv(*corr, (out_dir / "correlation.csv").string());
    write_pgm(*corr, (out_dir / "correlation.pgm").string());
    double off = mean_abs_offdiag(*corr);
    std::cout << "mean_abs_offdiag " << fmt17(off) << '\n';
    if (verbose) std::cout << "wrote " << (out_dir / "correlation.csv").string() << '\n';
    return kExitOk;
}

int cmd_bench(const ExperimentConfig& cfg, bool verbose) {
    cfg.validate({"model.layers", "model.T", "data.d_list", "data.n", "train.runs",
                  "train.seed", "output.out_dir"},
                 {"model.layers", "data.d_list", "data.n", "train.runs", "output.out_dir"});
    fs::path out_dir(cfg.get("output", "out_dir"));
    fs::create_directories(out_dir);

    const int n = cfg.get_int("data", "n");
    const int runs = cfg.get_int("train", "runs");
    const int t_iters = cfg.get_int_or("model", "T", 5);
    const uint64_t seed = static_cast<uint64_t>(cfg.get_int_or("train", "seed", 13));

    std::ofstream out(out_dir / "bench.csv", std::ios::trunc);
    out << "layer,d,n,T,mean_ms,std_ms,matmul_count\n";

    using clock = std::chrono::steady_clock;
    for (const auto& layer_name : cfg.get_list("model", "layers")) {
        NormKind kind = parse_norm_kind(layer_name);
        for (int d : cfg.get_int_list("data", "d_list")) {
            Rng rng(seed + static_cast<uint64_t>(d));
            Matrix x(d, n), grad_out(d, n);
            for (size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
            for (size_t i = 0; i < grad_out.size(); ++i) grad_out.data()[i] = rng.normal();

            NormLayer layer(kind, d, 1e-5, t_iters);
            OpCounter counter;
            std::vector<double> ms(runs);
            for (int r = 0; r < runs; ++r) {
                auto t0 = clock::now();
                // Count the training forward only; the complexity contract
                // is per training step.
                Matrix y = layer.forward_train(x, r == 0 ? &counter : nullptr);
                LayerGrads g = layer.backward(grad_out, BackwardMode::Faithful);
                auto t1 = clock::now();
                (void)y;
                (void)g;
                ms[r] = std::chrono::duration<double, std::milli>(t1 - t0).count();
            }
            double mean = 0;
            for (double v : ms) mean += v;
            mean /= runs;
            double var = 0;
            for (double v : ms) var += (v - mean) * (v - mean);
            double stddev = runs > 1 ? std::sqrt(var / (runs - 1)) : 0.0;
            out << layer_name << ',' << d << ',' << n << ','
                << (kind == NormKind::IterNorm ? t_iters : 0) << ',' << fmt17(mean) << ','
                << fmt17(stddev) << ',' << counter.matmul_mults << '\n';
            out.flush();
            if (verbose)
                std::cout << layer_name << " d=" << d << ": " << mean << " ms, "
                          << counter.matmul_mults << " mults\n";
        }
    }
    return kExitOk;
}

int run_subcommand(const std::string& name, const ExperimentConfig& cfg, bool verbose) {
    try {
        if (name == "train") return cmd_train(cfg, verbose);
        if (name == "whiten-demo") return cmd_whiten_demo(cfg, verbose);
        if (name == "heatmap") return cmd_heatmap(cfg, verbose);
        if (name == "bench") return cmd_bench(cfg, verbose);
        std::cerr << "unknown subcommand: " << name << '\n';
        return kExitConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntimeError;
    }
}

}  // namespace swbn
