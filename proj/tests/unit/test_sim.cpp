#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rhogap/benchmark_system.hpp"
#include "rhogap/errors.hpp"
#include "rhogap/experiment.hpp"
#include "rhogap/rollout.hpp"

using namespace rhogap;

TEST(Benchmark, DynamicsHandValue) {
  const Vector g = BenchmarkSystem::dynamics(Vector::Zero(2), Vector::Zero(2));
  EXPECT_NEAR(g(0), 0.5, 1e-15);
  EXPECT_NEAR(g(1), 0.0, 1e-15);
}

TEST(Benchmark, InputCancelsDriftAndResidualIgnoresInput) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 50; ++k) {
    const Vector x = oracle::random_vector(rng, 2, -2, 2);
    const Vector u = oracle::random_vector(rng, 2, -2, 2);
    const Vector g0 = BenchmarkSystem::dynamics(x, Vector::Zero(2));
    EXPECT_LE(BenchmarkSystem::dynamics(x, -g0).norm(), 1e-14);
    EXPECT_LE((BenchmarkSystem::dynamics(x, u) - (x + u) - BenchmarkSystem::residual(x)).norm(), 1e-14);
  }
}

TEST(Benchmark, LatentDecompositionAndPrior) {
  std::mt19937_64 rng(22);
  const Matrix A = BenchmarkSystem::coregionalization();
  const PriorMean prior = BenchmarkSystem::prior_mean();
  for (int k = 0; k < 20; ++k) {
    const Vector z = oracle::random_vector(rng, 4, -2, 2);
    EXPECT_LE((A * BenchmarkSystem::latent(z) - BenchmarkSystem::dynamics(z.head(2), z.tail(2))).norm(), 1e-14);
    EXPECT_LE((A * prior(z) - (z.head(2) + z.tail(2))).norm(), 1e-14);
  }
}

TEST(Reference, VelocityMatchesFiniteDifference) {
  const ReferenceTrajectory ref(0.7, -1.3);
  for (double t : {0.0, 0.4, 2.0, 5.5}) {
    const double h = 1e-6;
    const Vector fd = (ref.position(t + h) - ref.position(t - h)) / (2 * h);
    EXPECT_LE((fd - ref.velocity(t)).norm(), 1e-6);
  }
}

TEST(Controller, PriorOnlyOnReference) {
  const ReferenceTrajectory ref(1.1, 0.4);
  const auto c = TrackingController::prior_only(ref, 15.0);
  const double t = 0.9;
  const Vector u = c(ref.position(t), t);
  EXPECT_LE((u - (ref.velocity(t) - ref.position(t))).norm(), 1e-15);
}

TEST(Controller, ExactModelWithoutGainFollowsReferenceVelocity) {
  const ReferenceTrajectory ref(1.1, 0.4);
  const auto c = TrackingController::exact(ref, 0.0);
  std::mt19937_64 rng(23);
  for (int k = 0; k < 10; ++k) {
    const Vector x = oracle::random_vector(rng, 2, -2, 2);
    const double t = 0.3 * k;
    EXPECT_LE((BenchmarkSystem::dynamics(x, c(x, t)) - ref.velocity(t)).norm(), 1e-13);
  }
}

TEST(Controller, ScheduledSwitchesAtIntervalBoundaries) {
  ExperimentSettings s;
  s.N = 20;
  s.T = 3.0;
  s.dt = 2e-3;
  const RolloutSetup setup = prepare_rollout(s, 0);
  std::vector<std::vector<std::size_t>> subsets = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  const auto c = build_controller(s, setup, subsets, SelectionMethod::kRhoGap);
  const IntervalSchedule sched(ReferenceTrajectory::period(), 4);
  const auto iv = sched.intervals();
  EXPECT_EQ(c.active_model(iv[1].begin), c.models()[1].get());
  EXPECT_EQ(c.active_model(std::nextafter(iv[1].begin, 0.0)), c.models()[0].get());
  EXPECT_EQ(c.active_model(iv[3].begin + 0.01), c.models()[3].get());
  EXPECT_EQ(c.active_model(ReferenceTrajectory::period() + 0.01), c.models()[0].get());
}

TEST(Rollout, ExactModelTracksPerfectly) {
  const ReferenceTrajectory ref(0.8, -1.2);
  const auto c = TrackingController::exact(ref, 15.0);
  RolloutOptions opt;
  const auto r = rollout(c, ref.position(0.0), opt);
  EXPECT_FALSE(r.diverged);
  EXPECT_LE(r.mse_steady_state, 1e-10);
  for (const auto& row : r.trace) EXPECT_GE(row.V, 0.0);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_GT(r.trace[k].t, r.trace[k - 1].t);
}

TEST(Rollout, FourthOrderConvergence) {
  const ReferenceTrajectory ref(0.8, -1.2);
  const auto c = TrackingController::prior_only(ref, 15.0);
  Vector x0(2);
  x0 << 0.5, 0.5;
  auto final_state = [&](double dt) {
    RolloutOptions opt;
    opt.T = 1.0;
    opt.dt = dt;
    return rollout(c, x0, opt).trace.back().x;
  };
  const Vector a = final_state(0.04), b = final_state(0.02), ref_sol = final_state(0.0025);
  const double ea = (a - ref_sol).norm(), eb = (b - ref_sol).norm();
  EXPECT_GT(ea / eb, 12.0);
}

TEST(Rollout, DivergenceIsFlagged) {
  const ReferenceTrajectory ref(0.0, 0.0);
  const auto c = TrackingController::prior_only(ref, -50.0);
  RolloutOptions opt;
  opt.T = 5.0;
  opt.dt = 1e-2;
  const auto r = rollout(c, Vector::Constant(2, 1.0), opt);
  EXPECT_TRUE(r.diverged);
  EXPECT_TRUE(std::isinf(r.mse_steady_state));
  EXPECT_THROW(rollout(c, Vector::Zero(2), RolloutOptions{1.0, 0.0}), InvalidArgument);
}

TEST(Rollout, TraceCsvHeader) {
  const ReferenceTrajectory ref(0.5, 0.5);
  RolloutOptions opt;
  opt.T = 0.01;
  const auto r = rollout(TrackingController::prior_only(ref, 15.0), ref.position(0), opt);
  std::ostringstream os;
  write_trace_csv(os, r.trace);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,x1,x2,u1,u2,xref1,xref2,V,Vdot_nom,Vdot_sigma");
}

TEST(TrainingData, SizeNoiseAndDeterminism) {
  const ReferenceTrajectory ref(0.9, -0.6);
  const Dataset a = generate_training_data(ref, 5, 100, 10.0, 0.01 * Matrix::Identity(2, 2));
  const Dataset b = generate_training_data(ref, 5, 100, 10.0, 0.01 * Matrix::Identity(2, 2));
  ASSERT_EQ(a.size(), 100u);
  for (std::size_t n = 0; n < a.size(); ++n) {
    EXPECT_EQ(a[n].z, b[n].z);
    EXPECT_EQ(a[n].y, b[n].y);
  }
  const Dataset clean = generate_training_data(ref, 5, 20, 2.0, Matrix::Zero(2, 2));
  for (const auto& s : clean.samples()) {
    EXPECT_EQ(s.y, BenchmarkSystem::dynamics(s.z.head(2), s.z.tail(2)));
  }
}

TEST(Experiment, ResidualIsLearnable) {
  ExperimentSettings s;
  const RolloutSetup setup = prepare_rollout(s, 0);
  double worst = 0.0;
  for (const auto& sample : setup.full_model->data().samples()) {
    worst = std::max(worst, setup.full_model->latent_variances(sample.z).maxCoeff());
  }
  EXPECT_LT(worst, 1.0);
}

TEST(Experiment, ZeroRolloutsGiveEmptySummary) {
  ExperimentSettings s;
  s.rollouts = 0;
  const auto report = evaluate_experiment(s);
  EXPECT_TRUE(report.summary.empty());
  EXPECT_TRUE(report.records.empty());
}

TEST(Experiment, SmallRunHasAllMethodsAndFasterSubsets) {
  ExperimentSettings s;
  s.N = 40;
  s.T = 4.0;
  s.dt = 2e-3;
  s.budget = 5;
  s.intervals = 4;
  s.t_grid = 6;
  s.rollouts = 2;
  const auto report = evaluate_experiment(s);
  ASSERT_EQ(report.summary.size(), 4u);
  const double full_time = report.summary[0].pred_time_us_mean;
  for (std::size_t k = 1; k < 4; ++k) {
    EXPECT_LT(report.summary[k].pred_time_us_mean, full_time);
    EXPECT_TRUE(std::isfinite(report.summary[k].mse_mean));
  }
}
