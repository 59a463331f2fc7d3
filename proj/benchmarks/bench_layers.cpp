#include <benchmark/benchmark.h>

#include "swbn/data.hpp"
#include "swbn/norm_layer.hpp"

namespace {

swbn::Matrix random_batch(int d, int n, uint64_t seed) {
    swbn::Rng rng(seed);
    swbn::Matrix x(d, n);
    for (size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    return x;
}

void bench_matmul(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    swbn::Matrix a = random_batch(d, d, 1), b = random_batch(d, d, 2);
    for (auto _ : state) {
        swbn::Matrix c = swbn::matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
}
BENCHMARK(bench_matmul)->Arg(64)->Arg(256)->Arg(1024);

void bench_forward(benchmark::State& state, swbn::NormKind kind) {
    const int d = static_cast<int>(state.range(0));
    const int n = static_cast<int>(state.range(1));
    swbn::Matrix x = random_batch(d, n, 3);
    swbn::NormLayer layer(kind, d);
    for (auto _ : state) {
        swbn::Matrix y = layer.forward_train(x);
        benchmark::DoNotOptimize(y.data());
    }
}
BENCHMARK_CAPTURE(bench_forward, bn, swbn::NormKind::BN)->Args({64, 1024})->Args({256, 1024});
BENCHMARK_CAPTURE(bench_forward, swbn_kl, swbn::NormKind::SwbnKL)
    ->Args({64, 1024})
    ->Args({256, 1024});
BENCHMARK_CAPTURE(bench_forward, iternorm, swbn::NormKind::IterNorm)
    ->Args({64, 1024})
    ->Args({256, 1024});

}  // namespace

BENCHMARK_MAIN();
