#include "swbn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace swbn {

namespace {

uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint32_t read_be32(std::istream& f, const std::string& path) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw std::runtime_error("truncated IDX file: " + path);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | b[3];
}

void write_be32(std::ostream& f, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Rng::Rng(uint64_t seed) {
    uint64_t s = seed;
    state_ = splitmix64(s);
    if (state_ == 0) state_ = 0x2545f4914f6cdd1dULL;
}

uint64_t Rng::next_u64() {
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

int Rng::uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

Matrix gen_correlated_gaussian(int d, int n, const Matrix& sigma, uint64_t seed) {
    Matrix l = cholesky(sigma);
    Rng rng(seed);
    Matrix z(d, n);
    for (size_t i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    return matmul(l, z);
}

Matrix equicorrelation(int d, double rho) {
    Matrix s(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) s(i, j) = i == j ? 1.0 : rho;
    return s;
}

Matrix load_idx_images(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    uint32_t magic = read_be32(f, path);
    if (magic != 0x00000803)
        throw std::runtime_error("bad IDX image magic in " + path + ": got 0x" +
                                 [&] {
                                     char buf[16];
                                     std::snprintf(buf, sizeof(buf), "%08x", magic);
                                     return std::string(buf);
                                 }());
    uint32_t n = read_be32(f, path), rows = read_be32(f, path), cols = read_be32(f, path);
    size_t count = static_cast<size_t>(n) * rows * cols;
    std::vector<unsigned char> bytes(count);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<size_t>(f.gcount()) != count)
        throw std::runtime_error("truncated IDX image file: " + path);
    const int d = static_cast<int>(rows * cols);
    Matrix features(d, static_cast<int>(n));
    for (uint32_t i = 0; i < n; ++i)
        for (int p = 0; p < d; ++p)
            features(p, static_cast<int>(i)) = bytes[static_cast<size_t>(i) * d + p] / 255.0;
    return features;
}

std::vector<int> load_idx_labels(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    uint32_t magic = read_be32(f, path);
    if (magic != 0x00000801) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%08x", magic);
        throw std::runtime_error("bad IDX label magic in " + path + ": got 0x" + buf);
    }
    uint32_t n = read_be32(f, path);
    std::vector<unsigned char> bytes(n);
    f.read(reinterpret_cast<char*>(bytes.data()), n);
    if (static_cast<size_t>(f.gcount()) != n)
        throw std::runtime_error("truncated IDX label file: " + path);
    return std::vector<int>(bytes.begin(), bytes.end());
}

void write_idx_images(const std::string& path, const std::vector<uint8_t>& pixels, int n,
                      int rows, int cols) {
    if (pixels.size() != static_cast<size_t>(n) * rows * cols)
        throw std::invalid_argument("write_idx_images: pixel count mismatch");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    write_be32(f, 0x00000803);
    write_be32(f, static_cast<uint32_t>(n));
    write_be32(f, static_cast<uint32_t>(rows));
    write_be32(f, static_cast<uint32_t>(cols));
    f.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path);
    write_be32(f, 0x00000801);
    write_be32(f, static_cast<uint32_t>(labels.size()));
    f.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

std::vector<std::vector<int>> batches(int n_samples, int batch_size, uint64_t seed,
                                      bool shuffle) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<int> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    if (shuffle) {
        Rng rng(seed);
        for (int i = n_samples - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(i + 1)]);
    }
    std::vector<std::vector<int>> out;
    for (int start = 0; start < n_samples; start += batch_size) {
        int end = std::min(start + batch_size, n_samples);
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

Matrix gather_columns(const Matrix& features, const std::vector<int>& idx) {
    Matrix out(features.rows(), static_cast<int>(idx.size()));
    for (int c = 0; c < out.cols(); ++c)
        for (int r = 0; r < out.rows(); ++r) out(r, c) = features(r, idx[c]);
    return out;
}

std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& idx) {
    std::vector<int> out(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) out[i] = labels[idx[i]];
    return out;
}

Dataset make_blobs(int d, int n, int classes, double separation, uint64_t seed) {
    Rng rng(seed);
    Matrix centers(d, classes);
    for (size_t i = 0; i < centers.size(); ++i) centers.data()[i] = separation * rng.normal();
    Dataset ds;
    ds.features = Matrix(d, n);
    ds.labels.resize(n);
    ds.classes = classes;
    for (int i = 0; i < n; ++i) {
        int c = i % classes;
        ds.labels[i] = c;
        for (int r = 0; r < d; ++r) ds.features(r, i) = centers(r, c) + rng.normal();
    }
    return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, int train_n) {
    if (train_n < 1 || train_n >= ds.size())
        throw std::invalid_argument("split_dataset: bad train_n");
    std::vector<int> head(train_n), tail(ds.size() - train_n);
    std::iota(head.begin(), head.end(), 0);
    std::iota(tail.begin(), tail.end(), train_n);
    Dataset tr, te;
    tr.features = gather_columns(ds.features, head);
    te.features = gather_columns(ds.features, tail);
    if (!ds.labels.empty()) {
        tr.labels = gather_labels(ds.labels, head);
        te.labels = gather_labels(ds.labels, tail);
    }
    tr.classes = te.classes = ds.classes;
    tr.split = "train";
    te.split = "test";
    return {std::move(tr), std::move(te)};
}

std::pair<Dataset, Dataset> expand_digits(const Matrix& src_images,
                                          const std::vector<int>& src_labels, int train_n,
                                          int test_n, uint64_t seed) {
    const int n_src = src_images.cols();
    if (static_cast<int>(src_labels.size()) != n_src)
        throw std::invalid_argument("expand_digits: label count mismatch");
    if (src_images.rows() != 64)
        throw std::invalid_argument("expand_digits expects 8x8 source images");

    // Source-level split keeps augmented train/test disjoint.
    Rng rng(seed);
    std::vector<int> order(n_src);
    std::iota(order.begin(), order.end(), 0);
    for (int i = n_src - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
    int n_test_src = n_src / 6;
    std::vector<int> train_src(order.begin() + n_test_src, order.end());
    std::vector<int> test_src(order.begin(), order.begin() + n_test_src);

    auto render = [&](int src, Rng& r, Matrix& out, int col) {
        double dx = r.uniform(-1.5, 1.5);
        double dy = r.uniform(-1.5, 1.5);
        // Map each 28x28 pixel back into the (shifted) 8x8 grid, bilinear.
        for (int y = 0; y < 28; ++y) {
            for (int x = 0; x < 28; ++x) {
                double sy = (y + 0.5 + dy) * 8.0 / 28.0 - 0.5;
                double sx = (x + 0.5 + dx) * 8.0 / 28.0 - 0.5;
                int y0 = static_cast<int>(std::floor(sy));
                int x0 = static_cast<int>(std::floor(sx));
                double fy = sy - y0, fx = sx - x0;
                double v = 0.0;
                for (int oy = 0; oy < 2; ++oy) {
                    for (int ox = 0; ox < 2; ++ox) {
                        int yy = y0 + oy, xx = x0 + ox;
                        if (yy < 0 || yy > 7 || xx < 0 || xx > 7) continue;
                        double wgt = (oy ? fy : 1.0 - fy) * (ox ? fx : 1.0 - fx);
                        v += wgt * src_images(yy * 8 + xx, src);
                    }
                }
                v += 0.02 * r.normal();
                out(y * 28 + x, col) = std::clamp(v, 0.0, 1.0);
            }
        }
    };

    auto build = [&](const std::vector<int>& pool, int n_out, uint64_t sub_seed,
                     const std::string& split) {
        Dataset ds;
        ds.features = Matrix(784, n_out);
        ds.labels.resize(n_out);
        ds.classes = 10;
        ds.split = split;
        Rng r(sub_seed);
        for (int i = 0; i < n_out; ++i) {
            int src = pool[static_cast<size_t>(i) % pool.size()];
            ds.labels[i] = src_labels[src];
            render(src, r, ds.features, i);
        }
        return ds;
    };
    return {build(train_src, train_n, seed * 2 + 1, "train"),
            build(test_src, test_n, seed * 2 + 2, "test")};
}

}  // namespace swbn
