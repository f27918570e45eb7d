// OpenMP kernels against the serial reference loops.

#include <benchmark/benchmark.h>

#include <random>

#include "mdug/kernels.hpp"

namespace {

mdug::Matrix random_matrix(int r, int c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  mdug::Matrix m(r, c);
  for (double& v : m.flat()) v = n(rng);
  return m;
}

template <auto Fn>
void bm_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  mdug::Matrix c(n, n);
  for (auto _ : state) {
    Fn(a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}

template <auto Fn>
void bm_softmax(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_matrix(n, n, 3);
  mdug::Matrix out(n, n);
  for (auto _ : state) {
    Fn(a, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Fn>
void bm_layer_norm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto x = random_matrix(n, 64, 4);
  mdug::Matrix gain(1, 64, 1.0), bias(1, 64), out(n, 64);
  std::vector<double> mean, rstd;
  for (auto _ : state) {
    Fn(x, gain, bias, 1e-5, out, mean, rstd);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(bm_matmul<mdug::kernels::matmul>)->Name("matmul/omp")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul<mdug::kernels::serial::matmul>)->Name("matmul/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul<mdug::kernels::matmul_nt>)->Name("matmul_nt/omp")->Arg(128)->Arg(256);
BENCHMARK(bm_matmul<mdug::kernels::serial::matmul_nt>)->Name("matmul_nt/serial")->Arg(128)->Arg(256);
BENCHMARK(bm_matmul<mdug::kernels::matmul_tn>)->Name("matmul_tn/omp")->Arg(128)->Arg(256);
BENCHMARK(bm_matmul<mdug::kernels::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(128)->Arg(256);
BENCHMARK(bm_softmax<mdug::kernels::softmax_rows>)->Name("softmax/omp")->Arg(256)->Arg(512);
BENCHMARK(bm_softmax<mdug::kernels::serial::softmax_rows>)->Name("softmax/serial")->Arg(256)->Arg(512);
BENCHMARK(bm_layer_norm<mdug::kernels::layer_norm_rows>)->Name("layer_norm/omp")->Arg(512)->Arg(2048);
BENCHMARK(bm_layer_norm<mdug::kernels::serial::layer_norm_rows>)->Name("layer_norm/serial")->Arg(512)->Arg(2048);

BENCHMARK_MAIN();
