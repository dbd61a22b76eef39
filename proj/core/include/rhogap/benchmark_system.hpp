#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "rhogap/gp.hpp"
#include "rhogap/measure.hpp"
#include "rhogap/select.hpp"
#include "rhogap/types.hpp"

namespace rhogap {

// Two-state benchmark
//   x_dot = x + sigmoid(2 x1) [1, -1]^T + 0.5 [sin(pi x2), cos(pi x1)]^T + u
// written as g = A f with A = [[1, 0], [-1, 1]] and prior f_hat with
// A f_hat(z) = x + u.
class BenchmarkSystem {
 public:
  static constexpr std::size_t kStateDim = 2;
  static constexpr std::size_t kInputDim = 2;
  static constexpr std::size_t kLatentDim = 2;

  static Matrix coregionalization();
  // g(z) for z = [x; u].
  static Vector dynamics(VectorRef x, VectorRef u);
  // f(z) = A^{-1} g(z).
  static Vector latent(VectorRef z);
  // Prior mean of f: A^{-1} (x + u).
  static PriorMean prior_mean();
  // g(z) - (x + u); depends on x only.
  static Vector residual(VectorRef x);
};

inline Vector dynamics_eval(VectorRef x, VectorRef u) { return BenchmarkSystem::dynamics(x, u); }

// x_ref(t) = (c1 sin t, c2 cos t).
class ReferenceTrajectory {
 public:
  ReferenceTrajectory(double c1, double c2) : c1_(c1), c2_(c2) {}
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  Vector position(double t) const;
  Vector velocity(double t) const;
  static constexpr double period() { return 6.283185307179586; }

 private:
  double c1_;
  double c2_;
};

// V(x, t) = ||x - x_ref(t)||^2.
LyapunovSpec tracking_lyapunov(const ReferenceTrajectory& reference);

// Maps time to one of `count` equally long intervals of a repeating period.
class IntervalSchedule {
 public:
  IntervalSchedule(double period, std::size_t count);
  std::size_t count() const { return count_; }
  double period() const { return period_; }
  std::size_t index(double t) const;
  std::vector<TimeInterval> intervals() const;

 private:
  double period_;
  std::size_t count_;
};

// pi(x, t) = -(mu(x) + K (x - x_ref(t)) - x_ref_dot(t)), where mu(x) is the
// model's mean of g at (x, u = 0).
class TrackingController {
 public:
  enum class Source { kPriorOnly, kExact, kModel, kScheduled };

  static TrackingController prior_only(ReferenceTrajectory reference, double gain);
  // Uses the true dynamics as the model; for tests and oracles.
  static TrackingController exact(ReferenceTrajectory reference, double gain);
  static TrackingController with_model(ReferenceTrajectory reference, double gain,
                                       std::shared_ptr<const MultiOutputGP> model);
  // One model per schedule interval; the active model switches at interval
  // boundaries.
  static TrackingController scheduled(ReferenceTrajectory reference, double gain,
                                      std::vector<std::shared_ptr<const MultiOutputGP>> models,
                                      IntervalSchedule schedule);

  Source source() const { return source_; }
  double gain() const { return gain_; }
  const ReferenceTrajectory& reference() const { return reference_; }

  // Model mean of g(x, 0).
  Vector mean(VectorRef x, double t) const;
  // Model mean of g(x, u), the nominal closed-loop drift.
  Vector drift(VectorRef x, VectorRef u, double t) const;
  Vector operator()(VectorRef x, double t) const;
  // Model active at time t, or nullptr for prior-only and exact controllers.
  const MultiOutputGP* active_model(double t) const;
  const std::vector<std::shared_ptr<const MultiOutputGP>>& models() const { return models_; }

  Controller as_function() const;

 private:
  TrackingController(Source source, ReferenceTrajectory reference, double gain);

  Source source_;
  ReferenceTrajectory reference_;
  double gain_;
  std::vector<std::shared_ptr<const MultiOutputGP>> models_;
  IntervalSchedule schedule_{ReferenceTrajectory::period(), 1};
};

inline Vector control(VectorRef x, double t, const TrackingController& controller) {
  return controller(x, t);
}

// Closed-loop data: prior-only controller tracking `reference` from
// x_ref(0), N samples at uniformly spaced times in [0, T], y = g(z) + eps with
// eps ~ N(0, noise). Deterministic per seed.
Dataset generate_training_data(const ReferenceTrajectory& reference, std::uint64_t seed,
                               std::size_t N, double T, const Matrix& noise, double dt = 1e-3,
                               double gain = 15.0);

}  // namespace rhogap
