// Compares the serial reference kernels against the OpenMP versions.
// Thread count comes from OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "calibnet/matrix.hpp"
#include "calibnet/rng.hpp"

using namespace calibnet;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    RngStream rng(seed, 0);
    for (auto& v : m.data) v = rng.next_normal();
    return m;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
    Vector v(n);
    RngStream rng(seed, 0);
    for (auto& x : v) x = rng.next_normal();
    return v;
}

void bm_matmul_serial(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    Matrix a = random_matrix(n, n, 1);
    Matrix b = random_matrix(n, n, 2);
    for (auto _ : state) {
        Matrix c = matmul_serial(a, b);
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(std::int64_t(state.iterations()) * n * n * n);
}

void bm_matmul_omp(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    Matrix a = random_matrix(n, n, 1);
    Matrix b = random_matrix(n, n, 2);
    for (auto _ : state) {
        Matrix c = matmul_omp(a, b);
        benchmark::DoNotOptimize(c.data.data());
    }
    state.SetItemsProcessed(std::int64_t(state.iterations()) * n * n * n);
}

void bm_vec_mat_serial(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    Matrix w = random_matrix(n, n, 3);
    Vector x = random_vector(n, 4);
    for (auto _ : state) {
        Vector y = vec_mat_serial(x, w);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(std::int64_t(state.iterations()) * n * n);
}

void bm_vec_mat_omp(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    Matrix w = random_matrix(n, n, 3);
    Vector x = random_vector(n, 4);
    for (auto _ : state) {
        Vector y = vec_mat_omp(x, w);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(std::int64_t(state.iterations()) * n * n);
}

}  // namespace

BENCHMARK(bm_matmul_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_matmul_omp)->Arg(64)->Arg(256);
BENCHMARK(bm_vec_mat_serial)->Arg(64)->Arg(256);
BENCHMARK(bm_vec_mat_omp)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
