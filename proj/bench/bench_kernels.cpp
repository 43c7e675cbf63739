// Reference vs OpenMP kernels at model-sized shapes.
#include <benchmark/benchmark.h>

#include <vector>

#include "neutsflow/numerics/kernels.hpp"
#include "neutsflow/numerics/random.hpp"

using namespace neutsflow::numerics;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

std::vector<Complex> cnoise(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Complex> v(n);
    for (auto& x : v) x = {rng.normal(), rng.normal()};
    return v;
}

// batch 32, 2C+1 = 15 channels, k = 16, L = 96, M = 32
constexpr std::size_t kBatch = 32, kChan = 15, kWidth = 16, kLen = 96, kModes = 32;

template <auto Fn>
void bm_rfft(benchmark::State& state) {
    const std::size_t rows = kBatch * kChan * kWidth;
    const auto x = noise(rows * kLen, 1);
    std::vector<Complex> out(rows * (kLen / 2 + 1));
    for (auto _ : state) {
        Fn(x.data(), rows, kLen, out.data());
        benchmark::DoNotOptimize(out.data());
    }
}

template <auto Fn>
void bm_contract(benchmark::State& state) {
    const kernels::ContractDims d{kBatch * kChan, kWidth, kWidth, kModes};
    const auto x = cnoise(d.batch * d.k_in * d.modes, 2);
    const auto w = cnoise(d.k_in * d.k_out * d.modes, 3);
    std::vector<Complex> y(d.batch * d.k_out * d.modes);
    for (auto _ : state) {
        Fn(x.data(), w.data(), d, y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

template <auto Fn>
void bm_mix(benchmark::State& state) {
    const kernels::MixDims d{kBatch, kChan * kWidth, 7, kLen};
    const auto x = noise(d.batch * d.features * d.length, 4);
    const auto p = noise(d.out * d.features, 5);
    std::vector<double> y(d.batch * d.out * d.length);
    for (auto _ : state) {
        Fn(x.data(), p.data(), nullptr, d, y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

template <auto Fn>
void bm_linear(benchmark::State& state) {
    const kernels::LinearDims d{kBatch * 7, kLen, 128};
    const auto x = noise(d.rows * d.in, 6);
    const auto w = noise(d.out * d.in, 7);
    std::vector<double> y(d.rows * d.out);
    for (auto _ : state) {
        Fn(x.data(), w.data(), nullptr, d, y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

} // namespace

BENCHMARK(bm_rfft<kernels::reference::rfft_rows>)->Name("rfft/reference");
BENCHMARK(bm_rfft<kernels::parallel::rfft_rows>)->Name("rfft/parallel");
BENCHMARK(bm_contract<kernels::reference::complex_contract>)->Name("contract/reference");
BENCHMARK(bm_contract<kernels::parallel::complex_contract>)->Name("contract/parallel");
BENCHMARK(bm_mix<kernels::reference::mix_features>)->Name("mix/reference");
BENCHMARK(bm_mix<kernels::parallel::mix_features>)->Name("mix/parallel");
BENCHMARK(bm_linear<kernels::reference::linear_rows>)->Name("linear/reference");
BENCHMARK(bm_linear<kernels::parallel::linear_rows>)->Name("linear/parallel");

BENCHMARK_MAIN();
