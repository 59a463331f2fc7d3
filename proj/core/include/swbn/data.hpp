#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swbn/matrix.hpp"

namespace swbn {

// xorshift64* seeded through splitmix64. Same seed gives the same stream
// on every platform; all randomness in this project flows through it.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();
    double uniform();              // [0, 1)
    double uniform(double lo, double hi);
    double normal();               // standard normal via Box-Muller
    int uniform_int(int n);        // [0, n)

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct Dataset {
    Matrix features;            // d x N
    std::vector<int> labels;    // empty for unsupervised use
    int classes = 0;
    std::string split;

    int size() const { return features.cols(); }
    int dim() const { return features.rows(); }
};

// Columns are i.i.d. samples L * z with L = chol(sigma), z standard normal.
Matrix gen_correlated_gaussian(int d, int n, const Matrix& sigma, uint64_t seed);

// Equicorrelation matrix: unit diagonal, rho everywhere else.
Matrix equicorrelation(int d, double rho);

// IDX parsing, big-endian. Images: magic 0x00000803, then N, rows, cols and
// N*rows*cols bytes, flattened row-major to d = rows*cols and scaled to
// [0, 1] by /255. Labels: magic 0x00000801, then N and N bytes.
Matrix load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);
void write_idx_images(const std::string& path, const std::vector<uint8_t>& pixels, int n,
                      int rows, int cols);
void write_idx_labels(const std::string& path, const std::vector<uint8_t>& labels);

// Index batches for one epoch: N split into ceil(N/b) batches, last one
// possibly smaller. The shuffle permutation is drawn from Rng(seed).
std::vector<std::vector<int>> batches(int n_samples, int batch_size, uint64_t seed,
                                      bool shuffle);

Matrix gather_columns(const Matrix& features, const std::vector<int>& idx);
std::vector<int> gather_labels(const std::vector<int>& labels, const std::vector<int>& idx);

// Two-class Gaussian blobs for trainer sanity checks. Class centers are a
// function of the seed, so train/test splits must come from one call.
Dataset make_blobs(int d, int n, int classes, double separation, uint64_t seed);

// Column-prefix split; samples are i.i.d. so a prefix split is unbiased.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, int train_n);

// Upscales 8x8 source digits to 28x28 with bilinear interpolation, seeded
// pixel shifts and noise, producing disjoint train/test sets at the source
// image level. Stand-in corpus for runs that need IDX-format digit data.
std::pair<Dataset, Dataset> expand_digits(const Matrix& src_images,
                                          const std::vector<int>& src_labels, int train_n,
                                          int test_n, uint64_t seed);

}  // namespace swbn
