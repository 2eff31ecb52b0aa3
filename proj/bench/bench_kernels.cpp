#include <benchmark/benchmark.h>

#include <vector>

#include "agility/nn/kernels.hpp"
#include "agility/random.hpp"

namespace k = agility::nn::kernels;

namespace {

using Kernel = void (*)(const double*, const double*, double*, std::size_t, std::size_t,
                        std::size_t, bool);

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  agility::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = agility::normal(rng);
  return v;
}

// Square n x n operands; the transposed variants read the same buffers.
template <Kernel K>
void run(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto threads = static_cast<int>(state.range(1));
  k::set_threads(threads);
  const auto a = random_buffer(n * n, 1);
  const auto b = random_buffer(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    K(a.data(), b.data(), c.data(), n, n, n, false);
    benchmark::DoNotOptimize(c.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
  state.counters["threads"] = threads;
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {64, 128, 256}) {
    b->Args({n, 1});
    if (k::max_threads() > 1) b->Args({n, k::max_threads()});
  }
}

void serial_sizes(benchmark::internal::Benchmark* b) {
  for (long n : {64, 128, 256}) b->Args({n, 1});
}

}  // namespace

BENCHMARK(run<k::reference::matmul>)->Name("reference/matmul")->Apply(serial_sizes);
BENCHMARK(run<k::fast::matmul>)->Name("fast/matmul")->Apply(sizes);
BENCHMARK(run<k::reference::matmul_tn>)->Name("reference/matmul_tn")->Apply(serial_sizes);
BENCHMARK(run<k::fast::matmul_tn>)->Name("fast/matmul_tn")->Apply(sizes);
BENCHMARK(run<k::reference::matmul_nt>)->Name("reference/matmul_nt")->Apply(serial_sizes);
BENCHMARK(run<k::fast::matmul_nt>)->Name("fast/matmul_nt")->Apply(sizes);

BENCHMARK_MAIN();
