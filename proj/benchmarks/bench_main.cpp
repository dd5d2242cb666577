#include <benchmark/benchmark.h>

#include <random>

#include "ozlab/gibbs.hpp"
#include "ozlab/local_limit.hpp"
#include "ozlab/pipeline.hpp"
#include "ozlab/random_line.hpp"
#include "ozlab/ruelle.hpp"

namespace {

oz::LatticeGraph grid(int w, int h) {
  std::vector<std::pair<oz::Site, oz::Site>> pairs;
  std::vector<double> J;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) pairs.push_back({{x, y, 0}, {x + 1, y, 0}}), J.push_back(1.0);
      if (y + 1 < h) pairs.push_back({{x, y, 0}, {x, y + 1, 0}}), J.push_back(1.0);
    }
  return oz::LatticeGraph(2, pairs, J);
}

oz::RuelleOperator random_operator(int S, int depth) {
  std::mt19937_64 rng(5);
  oz::Alphabet a;
  a.dim = 1;
  for (int z = 0; z < S; ++z) a.add({z % 3 + 1, 0, 0});
  std::uniform_real_distribution<double> u(0.2, 1.0);
  long cols = 1;
  for (int i = 0; i < depth; ++i) cols *= S + 1;
  std::vector<double> w(S * cols);
  for (double& x : w) x = u(rng) / S;
  return oz::RuelleOperator(a, depth, w);
}

void BM_ExactCorrelation(benchmark::State& state) {
  auto g = grid(int(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(oz::exact_correlation(g, 0.3, 0, g.vertex_count() - 1));
}
BENCHMARK(BM_ExactCorrelation)->Arg(3)->Arg(4)->Arg(5);

void BM_RepresentationSum(benchmark::State& state) {
  auto g = grid(int(state.range(0)), 2);
  oz::Site y{int(state.range(0)) - 1, 1, 0};
  for (auto _ : state) benchmark::DoNotOptimize(oz::representation_sum(g, {0, 0, 0}, y, 0.3));
}
BENCHMARK(BM_RepresentationSum)->Arg(3)->Arg(4)->Arg(5);

void BM_StripTransferMatrix(benchmark::State& state) {
  auto c = oz::CouplingField::nearest_neighbor(2);
  for (auto _ : state) benchmark::DoNotOptimize(oz::strip_two_point(int(state.range(0)), 64, 0.35, c));
}
BENCHMARK(BM_StripTransferMatrix)->Arg(4)->Arg(8);

void BM_SpectralData(benchmark::State& state) {
  auto op = random_operator(int(state.range(0)), int(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(oz::spectral_data(op).rho);
}
BENCHMARK(BM_SpectralData)->Args({8, 1})->Args({64, 1})->Args({16, 2})->Args({32, 2});

void BM_QnDistribution(benchmark::State& state) {
  auto op = oz::diagonal_walk(0.5);
  for (auto _ : state) benchmark::DoNotOptimize(oz::qn_distribution(op, {}, int(state.range(0))).mass);
}
BENCHMARK(BM_QnDistribution)->Arg(50)->Arg(200);

void BM_WulffBoundary(benchmark::State& state) {
  auto op = oz::nearest_neighbor_walk(0.2);
  oz::WulffOptions o;
  o.mode = oz::WulffMode::Radial;
  o.lo = 0;
  o.hi = 6.283185307179586;
  o.samples = int(state.range(0));
  for (auto _ : state) {
    auto b = oz::wulff_boundary(op, {0, 0, 0}, o);
    oz::curvature(b);
    benchmark::DoNotOptimize(b.kappa_bar);
  }
}
BENCHMARK(BM_WulffBoundary)->Arg(90)->Arg(360);

void BM_MonteCarloSweeps(benchmark::State& state) {
  oz::MonteCarloOptions o;
  o.size = int(state.range(0));
  o.beta = 0.35;
  o.sweeps = 16;
  o.warmup = 4;
  o.chains = 2;
  o.batches_per_chain = 4;
  o.max_distance = 8;
  for (auto _ : state) benchmark::DoNotOptimize(oz::monte_carlo_two_point(o).entries.size());
}
BENCHMARK(BM_MonteCarloSweeps)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
