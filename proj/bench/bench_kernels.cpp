#include <random>

#include <benchmark/benchmark.h>

#include "tdvae/kernels.hpp"

namespace {

tdvae::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    tdvae::Matrix m;
    m.resize(r, c);
    for (double& v : m.data) {
        v = n(rng);
    }
    return m;
}

struct Problem {
    tdvae::Matrix x, w, dy, out, gw, dx;
    std::vector<double> b, gb;

    explicit Problem(std::size_t batch) {
        x = random_matrix(batch, 768, 1);
        w = random_matrix(256, 768, 2);
        dy = random_matrix(batch, 256, 3);
        b.assign(256, 0.1);
        gb.assign(256, 0.0);
        gw.resize(256, 768);
    }
};

template <bool Parallel>
void BM_AffineForward(benchmark::State& state) {
    Problem p(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        if constexpr (Parallel) {
            tdvae::parallel::affine_forward(p.x, p.w, p.b, p.out);
        } else {
            tdvae::serial::affine_forward(p.x, p.w, p.b, p.out);
        }
        benchmark::DoNotOptimize(p.out.data.data());
    }
}

template <bool Parallel>
void BM_AffineBackwardParams(benchmark::State& state) {
    Problem p(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        if constexpr (Parallel) {
            tdvae::parallel::affine_backward_params(p.dy, p.x, p.gw, p.gb);
        } else {
            tdvae::serial::affine_backward_params(p.dy, p.x, p.gw, p.gb);
        }
        benchmark::DoNotOptimize(p.gw.data.data());
    }
}

template <bool Parallel>
void BM_AffineBackwardInput(benchmark::State& state) {
    Problem p(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        if constexpr (Parallel) {
            tdvae::parallel::affine_backward_input(p.dy, p.w, p.dx);
        } else {
            tdvae::serial::affine_backward_input(p.dy, p.w, p.dx);
        }
        benchmark::DoNotOptimize(p.dx.data.data());
    }
}

} // namespace

BENCHMARK(BM_AffineForward<false>)->Arg(144)->Arg(512);
BENCHMARK(BM_AffineForward<true>)->Arg(144)->Arg(512);
BENCHMARK(BM_AffineBackwardParams<false>)->Arg(144)->Arg(512);
BENCHMARK(BM_AffineBackwardParams<true>)->Arg(144)->Arg(512);
BENCHMARK(BM_AffineBackwardInput<false>)->Arg(144)->Arg(512);
BENCHMARK(BM_AffineBackwardInput<true>)->Arg(144)->Arg(512);

BENCHMARK_MAIN();
