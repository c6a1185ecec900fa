#include <benchmark/benchmark.h>

#include <random>

#include "srcid/numgrad/kernels.hpp"
#include "srcid/synth/synthdata.hpp"

using srcid::numgrad::Tensor;
namespace k = srcid::kernels;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Tensor t(r, c);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

// Shapes follow the training loop: rows = T * batch, widths = hidden sizes.
template <Tensor (*F)(const Tensor&, const Tensor&)>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor(n, 64, 1), b = random_tensor(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * 64 * 64));
}

template <Tensor (*F)(const Tensor&, const Tensor&)>
void BM_MatmulTn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor(n, 64, 1), b = random_tensor(n, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
}

template <std::vector<int> (*F)(const Tensor&, const Tensor&)>
void BM_Nearest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor q = random_tensor(n, 16, 3), e = random_tensor(static_cast<std::size_t>(state.range(1)), 16, 4);
  for (auto _ : state) benchmark::DoNotOptimize(F(q, e));
}

template <Tensor (*F)(const Tensor&, const Tensor&)>
void BM_Cosine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor(n, 16, 5), b = random_tensor(n, 16, 6);
  for (auto _ : state) benchmark::DoNotOptimize(F(a, b));
}

void BM_Generate(benchmark::State& state) {
  srcid::synth::GeneratorSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(srcid::synth::generate(spec, static_cast<std::size_t>(state.range(0))));
}

}  // namespace

BENCHMARK(BM_Matmul<k::serial::matmul>)->Name("matmul/serial")->Arg(320)->Arg(3200);
BENCHMARK(BM_Matmul<k::matmul>)->Name("matmul/omp")->Arg(320)->Arg(3200);
BENCHMARK(BM_Matmul<k::serial::matmul_nt>)->Name("matmul_nt/serial")->Arg(320)->Arg(3200);
BENCHMARK(BM_Matmul<k::matmul_nt>)->Name("matmul_nt/omp")->Arg(320)->Arg(3200);
BENCHMARK(BM_MatmulTn<k::serial::matmul_tn>)->Name("matmul_tn/serial")->Arg(320)->Arg(3200);
BENCHMARK(BM_MatmulTn<k::matmul_tn>)->Name("matmul_tn/omp")->Arg(320)->Arg(3200);
BENCHMARK(BM_Nearest<k::serial::nearest_rows>)->Name("nearest/serial")->Args({960, 64})->Args({9600, 256});
BENCHMARK(BM_Nearest<k::nearest_rows>)->Name("nearest/omp")->Args({960, 64})->Args({9600, 256});
BENCHMARK(BM_Cosine<k::serial::cosine_similarity>)->Name("cosine/serial")->Arg(100)->Arg(500);
BENCHMARK(BM_Cosine<k::cosine_similarity>)->Name("cosine/omp")->Arg(100)->Arg(500);
BENCHMARK(BM_Generate)->Name("synth_generate")->Arg(1000);

BENCHMARK_MAIN();
