#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rhogap/benchmark_system.hpp"
#include "rhogap/bounds.hpp"
#include "rhogap/gp.hpp"
#include "rhogap/measure.hpp"
#include "rhogap/rollout.hpp"
#include "rhogap/select.hpp"

namespace rhogap {

enum class SelectionMethod { kFull, kMiGrid, kMiReference, kRhoGap };

std::string to_string(SelectionMethod method);
SelectionMethod parse_selection_method(const std::string& name);

struct ExperimentSettings {
  // Per-output SE kernels over z = [x; u] and the mixing matrix A.
  CoregKernel kernel = default_kernel();
  Matrix noise = 1e-2 * Matrix::Identity(2, 2);

  // Training data and rollouts.
  std::size_t N = 100;
  double T = 10.0;
  double dt = 1e-3;
  double gain = 15.0;
  std::size_t rollouts = 20;
  std::uint64_t seed = 1;

  // Bounds. tau <= 0 means automatic; empty lipschitz_f means estimated from
  // the true dynamics over the domain box.
  double delta = 0.05;
  double tau = 0.0;
  double r0 = 0.0;
  std::vector<double> lipschitz_f;
  int lipschitz_grid = 5;
  // Empty means the bounding box of the training inputs padded by 10%.
  std::optional<Box> domain;

  // Measure and selection.
  std::size_t M = 1;
  double nu = 1e-3;
  StabilityMode mode = StabilityMode::kStability;
  XiCap xi_cap = XiCap::kSignedSum;
  std::size_t budget = 10;
  std::size_t intervals = 10;
  std::size_t t_grid = 20;
  std::vector<SelectionMethod> methods = {SelectionMethod::kFull, SelectionMethod::kMiGrid,
                                          SelectionMethod::kMiReference, SelectionMethod::kRhoGap};
  double mi_grid_half_width = 1.5;
  std::size_t mi_grid_per_dim = 10;

  // Latency measurement and output.
  int latency_repetitions = 20;
  std::size_t latency_queries = 50;
  std::size_t trace_stride = 10;
  bool keep_traces = false;
  unsigned threads = 1;

  static CoregKernel default_kernel();
  void validate() const;
};

// Everything derived from one seeded training set.
struct RolloutSetup {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  ReferenceTrajectory reference{0.0, 0.0};
  std::shared_ptr<const MultiOutputGP> full_model;
};

// Reference amplitudes c ~ N(0, I) and the training set for rollout r.
RolloutSetup prepare_rollout(const ExperimentSettings& settings, std::size_t r);

struct DerivedBounds {
  Box domain;
  LipschitzEstimate lipschitz;
  std::vector<double> lipschitz_f;
  UniformBoundParams params;
  std::vector<double> theta_sq;
};

// Grid estimate (times the safety factor) of the Lipschitz constants of the
// true latent f over the box.
std::vector<double> benchmark_latent_lipschitz(const Box& domain, int grid_per_dim);

DerivedBounds derive_bounds(const ExperimentSettings& settings, const MultiOutputGP& model);

RhoGapContext make_context(const ExperimentSettings& settings,
                           std::shared_ptr<const MultiOutputGP> model,
                           const ReferenceTrajectory& reference, const DerivedBounds& bounds);

SelectionProblem make_selection_problem(const ExperimentSettings& settings,
                                        const RhoGapContext& context);

// Selected index lists, one per schedule interval. kFull returns every
// index for every interval.
std::vector<std::vector<std::size_t>> select_subsets(const ExperimentSettings& settings,
                                                     SelectionMethod method,
                                                     const RolloutSetup& setup,
                                                     SelectionResult* greedy_details = nullptr);

TrackingController build_controller(const ExperimentSettings& settings, const RolloutSetup& setup,
                                    const std::vector<std::vector<std::size_t>>& subsets,
                                    SelectionMethod method);

struct RolloutRecord {
  std::size_t rollout = 0;
  SelectionMethod method = SelectionMethod::kFull;
  double c1 = 0.0;
  double c2 = 0.0;
  double mse = 0.0;
  bool diverged = false;
  double pred_time_us = 0.0;
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<TraceRow> trace;
};

struct MethodSummary {
  SelectionMethod method = SelectionMethod::kFull;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  double pred_time_us_mean = 0.0;
  std::size_t diverged = 0;
};

struct ExperimentReport {
  std::vector<MethodSummary> summary;
  std::vector<RolloutRecord> records;
};

ExperimentReport evaluate_experiment(const ExperimentSettings& settings);

// Columns method,mse_ss_mean,mse_ss_std,pred_time_us_mean.
void write_summary_csv(std::ostream& out, const std::vector<MethodSummary>& summary);

}  // namespace rhogap
