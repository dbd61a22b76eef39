#pragma once

#include <cstddef>
#include <vector>

#include "rhogap/dataset.hpp"
#include "rhogap/kernel.hpp"
#include "rhogap/measure.hpp"
#include "rhogap/types.hpp"

namespace rhogap {

// Half-open time interval [begin, end).
struct TimeInterval {
  double begin = 0.0;
  double end = 0.0;
};

// S equally long, disjoint intervals covering [t0, t_end).
std::vector<TimeInterval> partition_interval(double t0, double t_end, std::size_t count);
// `points` uniformly spaced times begin + k (end - begin) / points, k < points.
std::vector<double> interval_grid(const TimeInterval& interval, std::size_t points);

// Stand-in squared fill distance while a subset holds fewer than M samples.
inline constexpr double kUnfilledSq = 1e6;

struct SelectionProblem {
  Dataset full_data;
  std::size_t budget = 0;
  std::vector<TimeInterval> intervals;
  std::size_t t_grid = 20;
  RhoGapContext context;
};

struct SelectionResult {
  // Selected indices into full_data, one list per interval, in pick order.
  std::vector<std::vector<std::size_t>> subsets;
  // max rho over remaining candidates before each pick, per interval.
  std::vector<std::vector<double>> objective_trace;
  double wall_seconds = 0.0;
};

SelectionResult greedy_select(const SelectionProblem& problem);

struct ExhaustiveResult {
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<double> objective;
};

// Minimizes, per interval, max over data states x^(i) and the interval's time
// grid of rho(x^(i), t, subset) over all subsets of size `budget`.
ExhaustiveResult exhaustive_select(const SelectionProblem& problem, double max_subsets = 1e5);

// The objective exhaustive_select minimizes, for one interval and subset.
double subset_objective(const SelectionProblem& problem, std::size_t interval,
                        const std::vector<std::size_t>& subset);

// Greedy variance-reduction baseline: each step adds the sample that most
// reduces sum over reference points of trace(Sigma_g(z_ref)). Ties go to the
// smallest index. `variance_trace`, when given, receives the total reference
// variance after each pick.
std::vector<std::size_t> mi_greedy_select(const Dataset& data, const std::vector<Vector>& reference,
                                          std::size_t budget, const CoregKernel& kernel,
                                          const Matrix& noise,
                                          std::vector<double>* variance_trace = nullptr);

}  // namespace rhogap
