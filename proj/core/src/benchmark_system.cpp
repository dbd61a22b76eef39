#include "rhogap/benchmark_system.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "rhogap/errors.hpp"
#include "rhogap/rollout.hpp"

namespace rhogap {

namespace {

Vector with_zero_input(VectorRef x) {
  Vector z = Vector::Zero(static_cast<Eigen::Index>(BenchmarkSystem::kStateDim + BenchmarkSystem::kInputDim));
  z.head(x.size()) = x;
  return z;
}

void check_state(VectorRef x) {
  if (static_cast<std::size_t>(x.size()) != BenchmarkSystem::kStateDim) {
    throw InvalidArgument("benchmark: state must have dimension 2");
  }
}

}  // namespace

Matrix BenchmarkSystem::coregionalization() {
  Matrix A(2, 2);
  A << 1.0, 0.0, -1.0, 1.0;
  return A;
}

Vector BenchmarkSystem::residual(VectorRef x) {
  check_state(x);
  const double sigmoid = 1.0 / (1.0 + std::exp(-2.0 * x(0)));
  Vector r(2);
  r << sigmoid + 0.5 * std::sin(std::numbers::pi * x(1)),
      -sigmoid + 0.5 * std::cos(std::numbers::pi * x(0));
  return r;
}

Vector BenchmarkSystem::dynamics(VectorRef x, VectorRef u) {
  check_state(x);
  if (static_cast<std::size_t>(u.size()) != kInputDim) {
    throw InvalidArgument("benchmark: input must have dimension 2");
  }
  return x + residual(x) + u;
}

Vector BenchmarkSystem::latent(VectorRef z) {
  const Vector g = dynamics(z.head(2), z.tail(2));
  // A^{-1} = [[1, 0], [1, 1]].
  Vector f(2);
  f << g(0), g(0) + g(1);
  return f;
}

PriorMean BenchmarkSystem::prior_mean() {
  return [](VectorRef z) {
    if (z.size() != 4) throw InvalidArgument("benchmark prior: z must have dimension 4");
    const double s0 = z(0) + z(2);
    const double s1 = z(1) + z(3);
    Vector f(2);
    f << s0, s0 + s1;
    return f;
  };
}

Vector ReferenceTrajectory::position(double t) const {
  Vector p(2);
  p << c1_ * std::sin(t), c2_ * std::cos(t);
  return p;
}

Vector ReferenceTrajectory::velocity(double t) const {
  Vector v(2);
  v << c1_ * std::cos(t), -c2_ * std::sin(t);
  return v;
}

LyapunovSpec tracking_lyapunov(const ReferenceTrajectory& reference) {
  LyapunovSpec spec;
  spec.value = [reference](VectorRef x, double t) {
    return (x - reference.position(t)).squaredNorm();
  };
  spec.gradient = [reference](VectorRef x, double t) -> Vector {
    return 2.0 * (x - reference.position(t));
  };
  spec.time_derivative = [reference](VectorRef x, double t) {
    return -2.0 * (x - reference.position(t)).dot(reference.velocity(t));
  };
  return spec;
}

IntervalSchedule::IntervalSchedule(double period, std::size_t count)
    : period_(period), count_(count) {
  if (!(period > 0.0)) throw InvalidArgument("interval schedule: period must be positive");
  if (count == 0) throw InvalidArgument("interval schedule: need at least one interval");
}

std::size_t IntervalSchedule::index(double t) const {
  double phase = std::fmod(t, period_);
  if (phase < 0.0) phase += period_;
  const auto s = static_cast<std::size_t>(phase / (period_ / static_cast<double>(count_)));
  return std::min(s, count_ - 1);
}

std::vector<TimeInterval> IntervalSchedule::intervals() const {
  return partition_interval(0.0, period_, count_);
}

TrackingController::TrackingController(Source source, ReferenceTrajectory reference, double gain)
    : source_(source), reference_(reference), gain_(gain) {}

TrackingController TrackingController::prior_only(ReferenceTrajectory reference, double gain) {
  return TrackingController(Source::kPriorOnly, reference, gain);
}

TrackingController TrackingController::exact(ReferenceTrajectory reference, double gain) {
  return TrackingController(Source::kExact, reference, gain);
}

TrackingController TrackingController::with_model(ReferenceTrajectory reference, double gain,
                                                  std::shared_ptr<const MultiOutputGP> model) {
  if (!model) throw InvalidArgument("tracking controller: model is null");
  TrackingController c(Source::kModel, reference, gain);
  c.models_.push_back(std::move(model));
  return c;
}

TrackingController TrackingController::scheduled(
    ReferenceTrajectory reference, double gain,
    std::vector<std::shared_ptr<const MultiOutputGP>> models, IntervalSchedule schedule) {
  if (models.size() != schedule.count()) {
    throw InvalidArgument("tracking controller: " + std::to_string(models.size()) +
                          " models for " + std::to_string(schedule.count()) + " intervals");
  }
  for (const auto& m : models) {
    if (!m) throw InvalidArgument("tracking controller: model is null");
  }
  TrackingController c(Source::kScheduled, reference, gain);
  c.models_ = std::move(models);
  c.schedule_ = schedule;
  return c;
}

const MultiOutputGP* TrackingController::active_model(double t) const {
  switch (source_) {
    case Source::kModel:
      return models_.front().get();
    case Source::kScheduled:
      return models_[schedule_.index(t)].get();
    default:
      return nullptr;
  }
}

Vector TrackingController::drift(VectorRef x, VectorRef u, double t) const {
  switch (source_) {
    case Source::kPriorOnly:
      return x + u;
    case Source::kExact:
      return BenchmarkSystem::dynamics(x, u);
    default: {
      Vector z(x.size() + u.size());
      z << x, u;
      return active_model(t)->posterior_mean_g(z);
    }
  }
}

Vector TrackingController::mean(VectorRef x, double t) const {
  check_state(x);
  if (source_ == Source::kPriorOnly) return x;
  if (source_ == Source::kExact) return BenchmarkSystem::dynamics(x, Vector::Zero(2));
  return active_model(t)->posterior_mean_g(with_zero_input(x));
}

Vector TrackingController::operator()(VectorRef x, double t) const {
  return -(mean(x, t) + gain_ * (x - reference_.position(t)) - reference_.velocity(t));
}

Controller TrackingController::as_function() const {
  return [self = *this](VectorRef x, double t) { return self(x, t); };
}

Dataset generate_training_data(const ReferenceTrajectory& reference, std::uint64_t seed,
                               std::size_t N, double T, const Matrix& noise, double dt,
                               double gain) {
  if (N == 0) throw InvalidArgument("generate_training_data: N must be positive");
  if (!(T > 0.0) || !(dt > 0.0)) throw InvalidArgument("generate_training_data: T, dt must be positive");
  validate_noise_covariance(noise, 2);

  // Noise factor L with L L^T = noise, valid for semidefinite matrices.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (noise + noise.transpose()));
  const Matrix noise_factor =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  const auto controller = TrackingController::prior_only(reference, gain);
  const auto steps = static_cast<std::size_t>(std::llround(T / dt));
  std::vector<std::size_t> sample_steps(N);
  for (std::size_t n = 0; n < N; ++n) {
    const double t = N == 1 ? 0.0 : T * static_cast<double>(n) / static_cast<double>(N - 1);
    sample_steps[n] = std::min(steps, static_cast<std::size_t>(std::llround(t / dt)));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data(2, 2, "benchmark closed loop, seed " + std::to_string(seed));
  Vector x = reference.position(0.0);
  std::size_t next = 0;
  for (std::size_t k = 0; k <= steps && next < N; ++k) {
    const double t = static_cast<double>(k) * dt;
    while (next < N && sample_steps[next] == k) {
      const Vector u = controller(x, t);
      Vector eps(2);
      eps << normal(rng), normal(rng);
      data.add(x, u, BenchmarkSystem::dynamics(x, u) + noise_factor * eps);
      ++next;
    }
    x = rk4_step(x, t, dt, controller);
  }
  return data;
}

}  // namespace rhogap
