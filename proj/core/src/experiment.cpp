#include "rhogap/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

#include "rhogap/errors.hpp"

namespace rhogap {

namespace {

std::uint64_t rollout_seed(std::uint64_t base, std::size_t r) {
  // splitmix64 of base + r.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(r) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vector state_input(VectorRef x) {
  Vector z = Vector::Zero(4);
  z.head(2) = x;
  return z;
}

Box padded_bounds(const Dataset& data) {
  const PointMatrix Z = data.inputs();
  Box box{Z.colwise().minCoeff().transpose(), Z.colwise().maxCoeff().transpose()};
  const Vector pad = (0.1 * (box.upper - box.lower)).cwiseMax(1e-3);
  box.lower -= pad;
  box.upper += pad;
  return box;
}

std::vector<Vector> reference_points(const ReferenceTrajectory& reference,
                                     const TimeInterval& interval, std::size_t count) {
  std::vector<Vector> points;
  for (double t : interval_grid(interval, count)) points.push_back(state_input(reference.position(t)));
  return points;
}

std::vector<Vector> grid_points(double half_width, std::size_t per_dim) {
  std::vector<Vector> points;
  for (std::size_t a = 0; a < per_dim; ++a) {
    for (std::size_t b = 0; b < per_dim; ++b) {
      const double step = per_dim == 1 ? 0.0 : 2.0 * half_width / static_cast<double>(per_dim - 1);
      Vector x(2);
      x << -half_width + step * static_cast<double>(a), -half_width + step * static_cast<double>(b);
      points.push_back(state_input(x));
    }
  }
  return points;
}

}  // namespace

std::string to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::kFull: return "full";
    case SelectionMethod::kMiGrid: return "mi-grid";
    case SelectionMethod::kMiReference: return "mi-reference";
    case SelectionMethod::kRhoGap: return "rho-gap";
  }
  return "unknown";
}

SelectionMethod parse_selection_method(const std::string& name) {
  for (auto m : {SelectionMethod::kFull, SelectionMethod::kMiGrid, SelectionMethod::kMiReference,
                 SelectionMethod::kRhoGap}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidArgument("unknown selection method '" + name + "'");
}

CoregKernel ExperimentSettings::default_kernel() {
  return CoregKernel(BenchmarkSystem::coregionalization(),
                     {SEKernelParams(1.0, {0.5, 0.5}, {0, 1}), SEKernelParams(1.0, {0.5, 0.5}, {0, 1})});
}

void ExperimentSettings::validate() const {
  if (kernel.output_dim() != 2 || kernel.min_input_dim() > 4) {
    throw InvalidArgument("experiment: kernel must map z in R^4 to R^2");
  }
  validate_noise_covariance(noise, 2);
  if (N == 0) throw InvalidArgument("experiment: N must be positive");
  if (!(T > 0.0) || !(dt > 0.0) || dt > T) throw InvalidArgument("experiment: need 0 < dt <= T");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("experiment: delta must lie in (0, 1)");
  if (!lipschitz_f.empty() && lipschitz_f.size() != kernel.latent_dim()) {
    throw InvalidArgument("experiment: lipschitz_f needs one entry per latent output");
  }
  if (lipschitz_grid < 3) throw InvalidArgument("experiment: lipschitz grid needs >= 3 points");
  if (domain) domain->validate();
  if (M == 0) throw InvalidArgument("experiment: M must be positive");
  if (!(nu > 0.0)) throw InvalidArgument("experiment: nu must be positive");
  if (budget == 0 || budget > N) throw InvalidArgument("experiment: need 1 <= budget <= N");
  if (intervals == 0 || t_grid == 0) throw InvalidArgument("experiment: intervals and t_grid must be positive");
  if (mi_grid_per_dim == 0 || !(mi_grid_half_width > 0.0)) {
    throw InvalidArgument("experiment: MI grid must be non-empty");
  }
  if (latency_repetitions < 10) throw InvalidArgument("experiment: latency needs >= 10 repetitions");
  if (latency_queries == 0 || trace_stride == 0) {
    throw InvalidArgument("experiment: latency queries and trace stride must be positive");
  }
}

RolloutSetup prepare_rollout(const ExperimentSettings& settings, std::size_t r) {
  RolloutSetup setup;
  setup.index = r;
  setup.seed = rollout_seed(settings.seed, r);
  std::mt19937_64 rng(setup.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double c1 = normal(rng);
  const double c2 = normal(rng);
  setup.reference = ReferenceTrajectory(c1, c2);
  Dataset data = generate_training_data(setup.reference, rng(), settings.N, settings.T,
                                        settings.noise, settings.dt, settings.gain);
  setup.full_model = std::make_shared<const MultiOutputGP>(MultiOutputGP::fit(
      std::move(data), settings.kernel, settings.noise, BenchmarkSystem::prior_mean()));
  return setup;
}

std::vector<double> benchmark_latent_lipschitz(const Box& domain, int grid_per_dim) {
  domain.validate();
  if (domain.dim() != 4) throw InvalidArgument("benchmark_latent_lipschitz: box must be 4-D");
  if (grid_per_dim < 3) throw InvalidArgument("benchmark_latent_lipschitz: grid needs >= 3 points");
  std::vector<double> best(2, 0.0);
  const Vector width = domain.upper - domain.lower;
  const Vector h = 1e-5 * width.cwiseMax(1e-12);
  std::vector<int> idx(4, 0);
  const auto total = static_cast<std::size_t>(std::pow(grid_per_dim, 4));
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    Vector z(4);
    for (Eigen::Index j = 0; j < 4; ++j) {
      const auto k = static_cast<double>(rem % static_cast<std::size_t>(grid_per_dim));
      rem /= static_cast<std::size_t>(grid_per_dim);
      z(j) = domain.lower(j) + width(j) * k / (grid_per_dim - 1);
    }
    Matrix J(2, 4);
    for (Eigen::Index j = 0; j < 4; ++j) {
      Vector zp = z, zm = z;
      zp(j) += h(j);
      zm(j) -= h(j);
      J.col(j) = (BenchmarkSystem::latent(zp) - BenchmarkSystem::latent(zm)) / (2.0 * h(j));
    }
    for (std::size_t i = 0; i < 2; ++i) {
      best[i] = std::max(best[i], J.row(static_cast<Eigen::Index>(i)).norm());
    }
  }
  for (double& b : best) b *= kLipschitzSafetyFactor;
  return best;
}

DerivedBounds derive_bounds(const ExperimentSettings& settings, const MultiOutputGP& model) {
  DerivedBounds out;
  out.domain = settings.domain ? *settings.domain : padded_bounds(model.data());
  out.lipschitz = estimate_lipschitz(model, out.domain, settings.lipschitz_grid);
  out.lipschitz_f = settings.lipschitz_f.empty()
                        ? benchmark_latent_lipschitz(out.domain, settings.lipschitz_grid)
                        : settings.lipschitz_f;
  const double r0 = settings.r0 > 0.0 ? settings.r0 : 0.5 * out.domain.diameter();
  double tau = settings.tau;
  if (!(tau > 0.0)) {
    std::vector<Vector> validation;
    for (const auto& s : model.data().samples()) validation.push_back(s.z);
    tau = choose_tau(model, validation, settings.delta, r0, out.lipschitz_f, out.lipschitz);
  }
  out.params = UniformBoundParams::make(settings.delta, tau, r0, model.kernel().output_dim(),
                                        out.lipschitz_f, out.lipschitz.mean,
                                        out.lipschitz.variance);
  for (std::size_t i = 0; i < model.kernel().latent_dim(); ++i) {
    out.theta_sq.push_back(theta_sq(model.kernel(), model.noise(), settings.M, i));
  }
  return out;
}

RhoGapContext make_context(const ExperimentSettings& settings,
                           std::shared_ptr<const MultiOutputGP> model,
                           const ReferenceTrajectory& reference, const DerivedBounds& bounds) {
  auto controller = TrackingController::with_model(reference, settings.gain, model);
  return RhoGapContext::make(std::move(model), tracking_lyapunov(reference),
                             controller.as_function(), bounds.params, settings.M, settings.nu,
                             settings.mode, settings.xi_cap);
}

SelectionProblem make_selection_problem(const ExperimentSettings& settings,
                                        const RhoGapContext& context) {
  SelectionProblem problem{context.model->data(), settings.budget,
                           IntervalSchedule(ReferenceTrajectory::period(), settings.intervals).intervals(),
                           settings.t_grid, context};
  return problem;
}

std::vector<std::vector<std::size_t>> select_subsets(const ExperimentSettings& settings,
                                                     SelectionMethod method,
                                                     const RolloutSetup& setup,
                                                     SelectionResult* greedy_details) {
  const MultiOutputGP& full = *setup.full_model;
  const auto intervals = IntervalSchedule(ReferenceTrajectory::period(), settings.intervals).intervals();
  std::vector<std::vector<std::size_t>> subsets;
  switch (method) {
    case SelectionMethod::kFull: {
      std::vector<std::size_t> all(full.size());
      for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
      subsets.assign(intervals.size(), all);
      break;
    }
    case SelectionMethod::kMiGrid: {
      const auto picked = mi_greedy_select(full.data(),
                                           grid_points(settings.mi_grid_half_width, settings.mi_grid_per_dim),
                                           settings.budget, full.kernel(), full.noise());
      subsets.assign(intervals.size(), picked);
      break;
    }
    case SelectionMethod::kMiReference: {
      for (const auto& interval : intervals) {
        subsets.push_back(mi_greedy_select(full.data(),
                                           reference_points(setup.reference, interval, settings.t_grid),
                                           settings.budget, full.kernel(), full.noise()));
      }
      break;
    }
    case SelectionMethod::kRhoGap: {
      const DerivedBounds bounds = derive_bounds(settings, full);
      const RhoGapContext ctx = make_context(settings, setup.full_model, setup.reference, bounds);
      SelectionResult result = greedy_select(make_selection_problem(settings, ctx));
      subsets = result.subsets;
      if (greedy_details != nullptr) *greedy_details = std::move(result);
      break;
    }
  }
  return subsets;
}

TrackingController build_controller(const ExperimentSettings& settings, const RolloutSetup& setup,
                                    const std::vector<std::vector<std::size_t>>& subsets,
                                    SelectionMethod method) {
  if (method == SelectionMethod::kFull) {
    return TrackingController::with_model(setup.reference, settings.gain, setup.full_model);
  }
  const MultiOutputGP& full = *setup.full_model;
  std::vector<std::shared_ptr<const MultiOutputGP>> models;
  for (const auto& subset : subsets) {
    models.push_back(std::make_shared<const MultiOutputGP>(MultiOutputGP::fit(
        full.data().subset(subset), full.kernel(), full.noise(), full.prior_mean())));
  }
  return TrackingController::scheduled(setup.reference, settings.gain, std::move(models),
                                       IntervalSchedule(ReferenceTrajectory::period(), subsets.size()));
}

ExperimentReport evaluate_experiment(const ExperimentSettings& settings) {
  settings.validate();
  ExperimentReport report;
  const std::size_t R = settings.rollouts;
  const std::size_t K = settings.methods.size();
  if (R == 0 || K == 0) return report;

  report.records.resize(R * K);
  std::vector<std::optional<TrackingController>> controllers(R * K);

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t r = next++; r < R; r = next++) {
      try {
        const RolloutSetup setup = prepare_rollout(settings, r);
        RolloutOptions options;
        options.T = settings.T;
        options.dt = settings.dt;
        options.log_stride = settings.trace_stride;
        options.record_trace = settings.keep_traces;
        for (std::size_t k = 0; k < K; ++k) {
          const SelectionMethod method = settings.methods[k];
          auto subsets = select_subsets(settings, method, setup);
          TrackingController controller = build_controller(settings, setup, subsets, method);
          const RolloutResult result = rollout(controller, setup.reference.position(0.0), options);
          RolloutRecord& rec = report.records[r * K + k];
          rec.rollout = r;
          rec.method = method;
          rec.c1 = setup.reference.c1();
          rec.c2 = setup.reference.c2();
          rec.mse = result.mse_steady_state;
          rec.diverged = result.diverged;
          rec.trace = result.trace;
          if (method != SelectionMethod::kFull) rec.subsets = std::move(subsets);
          controllers[r * K + k].emplace(std::move(controller));
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = R;
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(settings.threads, static_cast<unsigned>(R)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  // Latency runs after all rollouts, single-threaded.
  std::vector<Vector> queries;
  for (std::size_t i = 0; i < R * K; ++i) {
    const TrackingController& controller = *controllers[i];
    queries.clear();
    for (std::size_t q = 0; q < settings.latency_queries; ++q) {
      const double t = ReferenceTrajectory::period() * static_cast<double>(q) /
                       static_cast<double>(settings.latency_queries);
      queries.push_back(state_input(controller.reference().position(t)));
    }
    double total = 0.0;
    for (const auto& model : controller.models()) {
      total += predict_timing(*model, queries, settings.latency_repetitions).mean_us;
    }
    report.records[i].pred_time_us = total / static_cast<double>(controller.models().size());
  }

  for (std::size_t k = 0; k < K; ++k) {
    MethodSummary s;
    s.method = settings.methods[k];
    double sum = 0.0, time_sum = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& rec = report.records[r * K + k];
      sum += rec.mse;
      time_sum += rec.pred_time_us;
      if (rec.diverged) ++s.diverged;
    }
    s.mse_mean = sum / static_cast<double>(R);
    s.pred_time_us_mean = time_sum / static_cast<double>(R);
    double sq = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const double d = report.records[r * K + k].mse - s.mse_mean;
      sq += d * d;
    }
    s.mse_std = R > 1 ? std::sqrt(sq / static_cast<double>(R - 1)) : 0.0;
    report.summary.push_back(s);
  }
  return report;
}

void write_summary_csv(std::ostream& out, const std::vector<MethodSummary>& summary) {
  out << "method,mse_ss_mean,mse_ss_std,pred_time_us_mean\n";
  const auto old_precision = out.precision(17);
  for (const auto& s : summary) {
    out << to_string(s.method) << ',' << s.mse_mean << ',' << s.mse_std << ','
        << s.pred_time_us_mean << '\n';
  }
  out.precision(old_precision);
}

}  // namespace rhogap
