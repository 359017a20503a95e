#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "seqot/kernels.hpp"
#include "seqot/ot.hpp"

namespace {

using seqot::Backend;

std::vector<double> cloud(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> out(n * dim);
  for (double& v : out) v = z(rng);
  return out;
}

Backend backend(const benchmark::State& s) { return s.range(1) ? Backend::parallel : Backend::serial; }

void set_label(benchmark::State& s) { s.SetLabel(s.range(1) ? "omp" : "serial"); }

void BM_CostMatrix(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  const std::size_t dim = 9;
  const auto x = cloud(n, dim, 1), y = cloud(n, dim, 2);
  std::vector<double> out(n * n);
  const seqot::kernels::CostArgs args{x, y, dim};
  for (auto _ : s) {
    seqot::kernels::cost_matrix(backend(s), args, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_label(s);
}

void BM_RowLogSumExp(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  const auto cost = cloud(n * n, 1, 3), offset = cloud(n, 1, 4);
  std::vector<double> out(n);
  const seqot::kernels::SoftminArgs args{cost.data(), n, n, offset.data(), 2.0};
  for (auto _ : s) {
    seqot::kernels::row_logsumexp(backend(s), args, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_label(s);
}

void BM_EntropicMap(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  const std::size_t dim = 9;
  const auto q = cloud(n, dim, 5), t = cloud(n, dim, 6), offset = cloud(n, 1, 7);
  std::vector<double> out(n * dim);
  const seqot::kernels::EntropicMapArgs args{q, t, dim, offset, 0.5};
  for (auto _ : s) {
    seqot::kernels::entropic_map(backend(s), args, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_label(s);
}

void BM_Sinkhorn(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  const std::size_t dim = 3;
  const seqot::DiscreteMeasure mu(dim, cloud(n, dim, 8), std::vector<double>(n, 1.0));
  const seqot::DiscreteMeasure nu(dim, cloud(n, dim, 9), std::vector<double>(n, 1.0));
  seqot::SinkhornOptions opt;
  opt.epsilon = 0.1;
  opt.tol = 1e-6;
  opt.backend = backend(s);
  for (auto _ : s) benchmark::DoNotOptimize(seqot::sinkhorn(mu, nu, seqot::CostSpec::quadratic(), opt).value);
  set_label(s);
}

}  // namespace

BENCHMARK(BM_CostMatrix)->ArgsProduct({{256, 1024, 2048}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RowLogSumExp)->ArgsProduct({{256, 1024, 2048}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EntropicMap)->ArgsProduct({{256, 1024, 2048}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sinkhorn)->ArgsProduct({{256, 512}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
