#include <benchmark/benchmark.h>

#include "bsgd/geometry.hpp"
#include "bsgd/models.hpp"
#include "bsgd/noise.hpp"
#include "bsgd/phantom.hpp"
#include "bsgd/radon.hpp"
#include "bsgd/rng.hpp"
#include "bsgd/solver.hpp"

namespace {

using namespace bsgd;

GridVector random_vector(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
  return GridVector(std::move(v));
}

void BM_DualityMap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double r = static_cast<double>(state.range(1)) / 10.0;
  const auto g = GeometryParams::make(r, std::max(r, 2.0));
  const GridVector x = random_vector(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(duality_map(x, g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_DualityMap)->Args({110 * 110, 11})->Args({110 * 110, 15})->Args({110 * 110, 20});

void BM_BregmanDistance(benchmark::State& state) {
  const auto g = GeometryParams::make(1.5, 2.0);
  const GridVector z = random_vector(110 * 110, 2);
  const GridVector w = random_vector(110 * 110, 3);
  for (auto _ : state) benchmark::DoNotOptimize(bregman_distance(z, w, g));
}
BENCHMARK(BM_BregmanDistance);

void BM_RadonBuild(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(RadonSystem::build(n, n, 30, n));
}
BENCHMARK(BM_RadonBuild)->Arg(32)->Arg(110)->Unit(benchmark::kMillisecond);

void BM_SchlierenBlockApply(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = make_schlieren_model(n, n, 180, n);
  const ForwardProblem p(model, 18);
  const GridVector x = make_phantom(PhantomKind::sparse_blobs, {n, n}, 5, 1.0, 7);
  for (auto _ : state) benchmark::DoNotOptimize(p.apply(0, x));
}
BENCHMARK(BM_SchlierenBlockApply)->Arg(32)->Arg(110);

void BM_SchlierenGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = make_schlieren_model(n, n, 180, n);
  const ForwardProblem p =
      ForwardProblem(model, 18).with_truth(make_phantom(PhantomKind::sparse_blobs, {n, n}, 5, 1.0, 7));
  const BlockList y = add_gaussian(p.exact_data(), 0.05, 1);
  const GridVector x = GridVector::filled({n, n}, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(stochastic_gradient(p, x, y, 3, 1.1, 1.1));
}
BENCHMARK(BM_SchlierenGradient)->Arg(32)->Arg(110);

void BM_SgdEpochDesk(benchmark::State& state) {
  const auto model = make_schlieren_model(32, 32, 30, 32);
  const ForwardProblem p =
      ForwardProblem(model, 6).with_truth(make_phantom(PhantomKind::sparse_blobs, {32, 32}, 5, 1.0, 7));
  const BlockList y = add_gaussian(p.exact_data(), 0.01, 1);
  SolverConfig c = SolverConfig::for_mode(ExponentMode::practice, 1.1, 2.0);
  c.mu0 = 3.0;
  c.step_decay_exponent = 0.2;
  c.max_epochs = 10;
  c.x0_value = 0.01;
  c.granularity = RecordGranularity::final_only;
  for (auto _ : state) benchmark::DoNotOptimize(run_sgd(p, y, c));
  state.SetItemsProcessed(state.iterations() * 10);
}
BENCHMARK(BM_SgdEpochDesk)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
