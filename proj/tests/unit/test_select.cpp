#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rhogap/errors.hpp"
#include "rhogap/experiment.hpp"
#include "rhogap/select.hpp"

using namespace rhogap;

namespace {

ExperimentSettings small_settings() {
  ExperimentSettings s;
  s.N = 24;
  s.T = 4.0;
  s.dt = 2e-3;
  s.budget = 4;
  s.intervals = 3;
  s.t_grid = 5;
  return s;
}

SelectionProblem benchmark_problem(const ExperimentSettings& s, std::size_t rollout, std::size_t first_n = 0) {
  RolloutSetup setup = prepare_rollout(s, rollout);
  if (first_n > 0) {
    std::vector<std::size_t> idx(first_n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto& full = *setup.full_model;
    setup.full_model = std::make_shared<const MultiOutputGP>(
        MultiOutputGP::fit(full.data().subset(idx), full.kernel(), full.noise(), full.prior_mean()));
  }
  const DerivedBounds bounds = derive_bounds(s, *setup.full_model);
  return make_selection_problem(s, make_context(s, setup.full_model, setup.reference, bounds));
}

// max rho over the remaining candidates and the interval grid, evaluated
// from scratch with rho_gap.
double recomputed_max(const SelectionProblem& p, std::size_t interval, const std::vector<std::size_t>& subset) {
  const Dataset sub = p.full_data.subset(subset);
  const std::set<std::size_t> taken(subset.begin(), subset.end());
  double best = 0.0;
  for (std::size_t i = 0; i < p.full_data.size(); ++i) {
    if (taken.count(i)) continue;
    for (double t : interval_grid(p.intervals[interval], p.t_grid)) {
      const double rho = subset.size() < p.context.M
                             ? rho_from(std::vector<double>(2, kUnfilledSq),
                                        requirement_at(p.full_data.state(i), t, p.context), p.context.theta_sq)
                             : rho_gap(p.full_data.state(i), t, sub, p.context);
      best = std::max(best, rho);
    }
  }
  return best;
}

}  // namespace

TEST(Intervals, PartitionAndGrid) {
  const auto iv = partition_interval(0.0, 1.0, 4);
  ASSERT_EQ(iv.size(), 4u);
  EXPECT_DOUBLE_EQ(iv[1].begin, 0.25);
  EXPECT_DOUBLE_EQ(iv[3].end, 1.0);
  const auto g = interval_grid(iv[1], 5);
  EXPECT_DOUBLE_EQ(g.front(), 0.25);
  EXPECT_LT(g.back(), 0.5);
  EXPECT_THROW(partition_interval(1.0, 1.0, 2), InvalidArgument);
  EXPECT_THROW(partition_interval(0.0, 1.0, 0), InvalidArgument);
}

TEST(Greedy, TraceMatchesRecomputationAndIsNonIncreasing) {
  const auto s = small_settings();
  const SelectionProblem p = benchmark_problem(s, 0);
  const SelectionResult r = greedy_select(p);
  ASSERT_EQ(r.subsets.size(), s.intervals);
  for (std::size_t k = 0; k < r.subsets.size(); ++k) {
    ASSERT_EQ(r.subsets[k].size(), s.budget);
    EXPECT_EQ(std::set<std::size_t>(r.subsets[k].begin(), r.subsets[k].end()).size(), s.budget);
    for (std::size_t n = 0; n < s.budget; ++n) {
      const std::vector<std::size_t> before(r.subsets[k].begin(), r.subsets[k].begin() + static_cast<std::ptrdiff_t>(n));
      EXPECT_NEAR(r.objective_trace[k][n], recomputed_max(p, k, before), 1e-9);
      if (n > 0) EXPECT_LE(r.objective_trace[k][n], r.objective_trace[k][n - 1]);
    }
  }
}

TEST(Greedy, FullBudgetSelectsEverything) {
  auto s = small_settings();
  s.budget = s.N = 8;
  s.intervals = 1;
  const SelectionProblem p = benchmark_problem(s, 1);
  const auto r = greedy_select(p);
  std::vector<std::size_t> sorted = r.subsets[0];
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> all(8);
  std::iota(all.begin(), all.end(), std::size_t{0});
  EXPECT_EQ(sorted, all);
}

TEST(Greedy, Deterministic) {
  const auto s = small_settings();
  const auto a = greedy_select(benchmark_problem(s, 2));
  const auto b = greedy_select(benchmark_problem(s, 2));
  EXPECT_EQ(a.subsets, b.subsets);
  EXPECT_EQ(a.objective_trace, b.objective_trace);
}

TEST(Exhaustive, NeverWorseThanGreedyOnTinyInstances) {
  auto s = small_settings();
  s.budget = 2;
  s.intervals = 2;
  for (std::size_t seed = 0; seed < 5; ++seed) {
    const SelectionProblem p = benchmark_problem(s, seed, 4);
    const auto ex = exhaustive_select(p);
    const auto gr = greedy_select(p);
    for (std::size_t k = 0; k < p.intervals.size(); ++k) {
      EXPECT_NEAR(ex.objective[k], subset_objective(p, k, ex.subsets[k]), 1e-12);
      EXPECT_LE(ex.objective[k], subset_objective(p, k, gr.subsets[k]) + 1e-12);
    }
  }
}

TEST(Exhaustive, FullBudgetReturnsFullSet) {
  auto s = small_settings();
  s.budget = 4;
  s.intervals = 1;
  const SelectionProblem p = benchmark_problem(s, 0, 4);
  const auto ex = exhaustive_select(p);
  EXPECT_EQ(ex.subsets[0], (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_DOUBLE_EQ(ex.objective[0], subset_objective(p, 0, {0, 1, 2, 3}));
}

TEST(Exhaustive, DuplicateSamplesTie) {
  auto s = small_settings();
  s.intervals = 1;
  s.budget = 2;
  SelectionProblem p = benchmark_problem(s, 0, 4);
  Dataset dup(2, 2);
  for (std::size_t n = 0; n < 3; ++n) dup.add(p.full_data[n]);
  dup.add(p.full_data[0]);
  p.full_data = dup;
  EXPECT_DOUBLE_EQ(subset_objective(p, 0, {0, 1}), subset_objective(p, 0, {3, 1}));
}

TEST(Exhaustive, RefusesHugeSearch) {
  auto s = small_settings();
  s.budget = 10;
  const SelectionProblem p = benchmark_problem(s, 0);
  EXPECT_THROW(exhaustive_select(p, 1000.0), CombinatorialLimit);
}

TEST(MiGreedy, CoincidentReferencePicksThatSample) {
  const auto s = small_settings();
  const RolloutSetup setup = prepare_rollout(s, 0);
  const auto& model = *setup.full_model;
  for (std::size_t target : {3u, 11u, 17u}) {
    const std::vector<Vector> ref = {model.data()[target].z};
    const auto picked = mi_greedy_select(model.data(), ref, 1, model.kernel(), model.noise());
    ASSERT_EQ(picked.size(), 1u);
    EXPECT_LE((model.data().state(picked[0]) - model.data().state(target)).norm(), 1e-12);
  }
}

TEST(MiGreedy, FullBudgetAndMonotoneVariance) {
  const auto s = small_settings();
  const RolloutSetup setup = prepare_rollout(s, 1);
  const auto& model = *setup.full_model;
  std::vector<Vector> ref;
  for (double t = 0; t < 6.0; t += 0.5) {
    Vector z = Vector::Zero(4);
    z.head(2) = setup.reference.position(t);
    ref.push_back(z);
  }
  std::vector<double> trace;
  const auto all = mi_greedy_select(model.data(), ref, model.size(), model.kernel(), model.noise(), &trace);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), model.size());
  for (std::size_t n = 1; n < trace.size(); ++n) EXPECT_LE(trace[n], trace[n - 1] + 1e-9);
  EXPECT_THROW(mi_greedy_select(model.data(), ref, model.size() + 1, model.kernel(), model.noise()),
               InvalidArgument);
}
