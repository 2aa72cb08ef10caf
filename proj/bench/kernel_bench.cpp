// Parallel kernels against their serial references on Cora-sized operands.

#include <benchmark/benchmark.h>

#include "abn/data_io.hpp"
#include "abn/graph.hpp"
#include "abn/kernels.hpp"
#include "abn/rng.hpp"

namespace {

abn::Tensor random_dense(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  abn::Rng rng(seed);
  abn::Tensor t(rows, cols);
  for (auto& x : t.values()) x = rng.uniform(-1.0, 1.0);
  return t;
}

// Random symmetric sparsity with about `per_row` entries per row.
abn::CsrMatrix random_sparse(std::size_t n, std::size_t per_row, std::uint64_t seed) {
  abn::Rng rng(seed);
  abn::Tensor dense(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    dense(i, i) = 1.0;
    for (std::size_t k = 0; k < per_row / 2; ++k) {
      const auto j = rng.below(n);
      dense(i, j) = dense(j, i) = rng.uniform();
    }
  }
  return abn::CsrMatrix::from_dense(dense);
}

const abn::CsrMatrix& laplacian() {
  static const abn::CsrMatrix lap = random_sparse(2708, 5, 7);
  return lap;
}

template <abn::Tensor (*Fn)(const abn::CsrMatrix&, const abn::Tensor&)>
void BM_spmm(benchmark::State& state) {
  const auto h = random_dense(2708, static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(laplacian(), h));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(laplacian().nnz()) * state.range(0));
}

template <abn::Tensor (*Fn)(const abn::Tensor&, const abn::Tensor&)>
void BM_matmul(benchmark::State& state) {
  const auto a = random_dense(2708, 64, 2);
  const auto b = random_dense(64, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
}

template <abn::Tensor (*Fn)(const abn::Tensor&, const abn::Tensor&)>
void BM_matmul_tn(benchmark::State& state) {
  const auto a = random_dense(2708, 64, 4);
  const auto b = random_dense(2708, static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
}

}  // namespace

BENCHMARK(BM_spmm<abn::kernels::spmm>)->Name("spmm/parallel")->Arg(7)->Arg(64);
BENCHMARK(BM_spmm<abn::reference::spmm>)->Name("spmm/serial")->Arg(7)->Arg(64);
BENCHMARK(BM_matmul<abn::kernels::matmul>)->Name("matmul/parallel")->Arg(7)->Arg(64);
BENCHMARK(BM_matmul<abn::reference::matmul>)->Name("matmul/serial")->Arg(7)->Arg(64);
BENCHMARK(BM_matmul_tn<abn::kernels::matmul_tn>)->Name("matmul_tn/parallel")->Arg(7)->Arg(64);
BENCHMARK(BM_matmul_tn<abn::reference::matmul_tn>)->Name("matmul_tn/serial")->Arg(7)->Arg(64);

BENCHMARK_MAIN();
