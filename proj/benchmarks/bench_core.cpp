#include <numeric>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "rhogap/benchmark_system.hpp"
#include "rhogap/experiment.hpp"

using namespace rhogap;

namespace {

Vector random_point(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v(j) = u(rng);
  return v;
}

Dataset random_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset d(2, 2);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector x = random_point(rng, 2), u = random_point(rng, 2);
    d.add(x, u, BenchmarkSystem::dynamics(x, u));
  }
  return d;
}

MultiOutputGP fitted(std::size_t n) {
  const ExperimentSettings s;
  return MultiOutputGP::fit(random_data(n, 7), s.kernel, s.noise, BenchmarkSystem::prior_mean());
}

void BM_KernelEval(benchmark::State& state) {
  const CoregKernel k = ExperimentSettings::default_kernel();
  std::mt19937_64 rng(1);
  const Vector z = random_point(rng, 4), zp = random_point(rng, 4);
  for (auto _ : state) benchmark::DoNotOptimize(coreg_eval(k, z, zp));
}
BENCHMARK(BM_KernelEval);

void BM_Fit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ExperimentSettings s;
  const Dataset d = random_data(n, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(MultiOutputGP::fit(d, s.kernel, s.noise, BenchmarkSystem::prior_mean()));
  }
}
BENCHMARK(BM_Fit)->Arg(10)->Arg(100);

void BM_PosteriorMean(benchmark::State& state) {
  const MultiOutputGP model = fitted(static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(2);
  const Vector z = random_point(rng, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.latent_means(z));
}
BENCHMARK(BM_PosteriorMean)->Arg(10)->Arg(100);

void BM_FillDistance(benchmark::State& state) {
  const Dataset d = random_data(static_cast<std::size_t>(state.range(0)), 3);
  const CoregKernel k = ExperimentSettings::default_kernel();
  std::mt19937_64 rng(4);
  const Vector x = random_point(rng, 2), u = random_point(rng, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fill_distance(d, x, u, k.kernel(0), 1));
}
BENCHMARK(BM_FillDistance)->Arg(10)->Arg(100);

void BM_GreedySelection(benchmark::State& state) {
  ExperimentSettings s;
  const RolloutSetup setup = prepare_rollout(s, 0);
  const DerivedBounds bounds = derive_bounds(s, *setup.full_model);
  const RhoGapContext ctx = make_context(s, setup.full_model, setup.reference, bounds);
  const SelectionProblem p = make_selection_problem(s, ctx);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_select(p));
}
BENCHMARK(BM_GreedySelection)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
