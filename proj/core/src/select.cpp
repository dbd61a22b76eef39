#include "rhogap/select.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "rhogap/errors.hpp"

namespace rhogap {

std::vector<TimeInterval> partition_interval(double t0, double t_end, std::size_t count) {
  if (count == 0) throw InvalidArgument("partition_interval: need at least one interval");
  if (!(t_end > t0)) throw InvalidArgument("partition_interval: empty time range");
  std::vector<TimeInterval> out(count);
  const double width = (t_end - t0) / static_cast<double>(count);
  for (std::size_t s = 0; s < count; ++s) {
    out[s].begin = t0 + width * static_cast<double>(s);
    out[s].end = s + 1 == count ? t_end : t0 + width * static_cast<double>(s + 1);
  }
  return out;
}

std::vector<double> interval_grid(const TimeInterval& interval, std::size_t points) {
  if (points == 0) throw InvalidArgument("interval_grid: need at least one point");
  std::vector<double> ts(points);
  const double width = interval.end - interval.begin;
  for (std::size_t k = 0; k < points; ++k) {
    ts[k] = interval.begin + width * static_cast<double>(k) / static_cast<double>(points);
  }
  return ts;
}

namespace {

void validate(const SelectionProblem& p) {
  if (p.budget == 0) throw InvalidArgument("selection: budget must be at least 1");
  if (p.budget > p.full_data.size()) {
    throw InvalidArgument("selection: budget " + std::to_string(p.budget) + " exceeds N = " +
                          std::to_string(p.full_data.size()));
  }
  if (p.intervals.empty()) throw InvalidArgument("selection: no time intervals");
  for (std::size_t s = 0; s < p.intervals.size(); ++s) {
    if (!(p.intervals[s].end > p.intervals[s].begin)) {
      throw InvalidArgument("selection: interval " + std::to_string(s) + " is empty");
    }
    if (s > 0 && p.intervals[s].begin < p.intervals[s - 1].end) {
      throw InvalidArgument("selection: intervals must be ordered and disjoint");
    }
  }
  if (p.t_grid == 0) throw InvalidArgument("selection: t_grid must be positive");
  if (!p.context.model) throw InvalidArgument("selection: context has no model");
}

// Requirements and query points for every (candidate, time) pair of one interval.
struct IntervalTable {
  std::vector<double> times;
  // requirements[i * times.size() + k]
  std::vector<PointRequirement> requirements;
  // Query z = [x^(i); pi(x^(i), t_k)], same layout.
  std::vector<Vector> queries;
};

IntervalTable build_table(const SelectionProblem& p, const TimeInterval& interval) {
  IntervalTable table;
  table.times = interval_grid(interval, p.t_grid);
  const std::size_t n = p.full_data.size();
  table.requirements.reserve(n * table.times.size());
  table.queries.reserve(n * table.times.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = p.full_data.state(i);
    for (double t : table.times) {
      PointRequirement req = requirement_at(x, t, p.context);
      Vector z(x.size() + req.u.size());
      z << x, req.u;
      table.queries.push_back(std::move(z));
      table.requirements.push_back(std::move(req));
    }
  }
  return table;
}

// Squared M-fill distances of `query` to the samples in `subset`, per output.
void fill_sq_for(const SelectionProblem& p, const Vector& query,
                 const std::vector<std::size_t>& subset, std::vector<double>& scratch,
                 std::vector<double>& out) {
  const auto& kernel = p.context.model->kernel();
  const std::size_t M = p.context.M;
  for (std::size_t i = 0; i < kernel.latent_dim(); ++i) {
    if (subset.size() < M) {
      out[i] = kUnfilledSq;
      continue;
    }
    scratch.resize(subset.size());
    for (std::size_t s = 0; s < subset.size(); ++s) {
      scratch[s] = kernel.kernel(i).scaled_sq_distance_unchecked(query.data(),
                                                                 p.full_data[subset[s]].z.data());
    }
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(M - 1),
                     scratch.end());
    out[i] = scratch[M - 1];
  }
}

double table_objective(const SelectionProblem& p, const IntervalTable& table,
                       const std::vector<std::size_t>& subset) {
  std::vector<double> scratch, fill(p.context.model->kernel().latent_dim());
  double worst = 0.0;
  for (std::size_t q = 0; q < table.queries.size(); ++q) {
    fill_sq_for(p, table.queries[q], subset, scratch, fill);
    worst = std::max(worst, rho_from(fill, table.requirements[q], p.context.theta_sq));
  }
  return worst;
}

}  // namespace

SelectionResult greedy_select(const SelectionProblem& problem) {
  validate(problem);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = problem.full_data.size();
  const std::size_t df = problem.context.model->kernel().latent_dim();
  SelectionResult result;
  std::vector<double> scratch, fill(df);

  for (const auto& interval : problem.intervals) {
    const IntervalTable table = build_table(problem, interval);
    const std::size_t nt = table.times.size();
    std::vector<std::size_t> subset;
    std::vector<double> trace;
    std::vector<bool> taken(n, false);
    for (std::size_t pick = 0; pick < problem.budget; ++pick) {
      double best = -1.0;
      std::size_t best_index = n;
      // Candidates and times are scanned in increasing order and only a strictly
      // larger score replaces the incumbent: ties go to the smallest index, then
      // the earliest time.
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        for (std::size_t k = 0; k < nt; ++k) {
          const std::size_t q = i * nt + k;
          fill_sq_for(problem, table.queries[q], subset, scratch, fill);
          const double rho = rho_from(fill, table.requirements[q], problem.context.theta_sq);
          if (rho > best) {
            best = rho;
            best_index = i;
          }
        }
      }
      taken[best_index] = true;
      subset.push_back(best_index);
      trace.push_back(best);
    }
    result.subsets.push_back(std::move(subset));
    result.objective_trace.push_back(std::move(trace));
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double subset_objective(const SelectionProblem& problem, std::size_t interval,
                        const std::vector<std::size_t>& subset) {
  validate(problem);
  if (interval >= problem.intervals.size()) {
    throw InvalidArgument("subset_objective: interval index out of range");
  }
  for (std::size_t idx : subset) {
    if (idx >= problem.full_data.size()) throw InvalidArgument("subset_objective: bad index");
  }
  return table_objective(problem, build_table(problem, problem.intervals[interval]), subset);
}

ExhaustiveResult exhaustive_select(const SelectionProblem& problem, double max_subsets) {
  validate(problem);
  const std::size_t n = problem.full_data.size();
  const std::size_t k = problem.budget;
  // C(n, k) in floating point to detect overflow of the guard.
  double count = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    count *= static_cast<double>(n - j) / static_cast<double>(j + 1);
  }
  count = std::round(count);
  if (count > max_subsets) throw CombinatorialLimit(count, max_subsets);

  ExhaustiveResult result;
  for (const auto& interval : problem.intervals) {
    const IntervalTable table = build_table(problem, interval);
    std::vector<std::size_t> combo(k);
    std::iota(combo.begin(), combo.end(), std::size_t{0});
    std::vector<std::size_t> best_combo = combo;
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
      const double value = table_objective(problem, table, combo);
      if (value < best) {
        best = value;
        best_combo = combo;
      }
      // Next combination in lexicographic order.
      std::size_t j = k;
      while (j > 0 && combo[j - 1] == n - k + (j - 1)) --j;
      if (j == 0) break;
      ++combo[j - 1];
      for (std::size_t r = j; r < k; ++r) combo[r] = combo[r - 1] + 1;
    }
    result.subsets.push_back(std::move(best_combo));
    result.objective.push_back(best);
  }
  return result;
}

std::vector<std::size_t> mi_greedy_select(const Dataset& data, const std::vector<Vector>& reference,
                                          std::size_t budget, const CoregKernel& kernel,
                                          const Matrix& noise,
                                          std::vector<double>* variance_trace) {
  const std::size_t n = data.size();
  if (budget > n) {
    throw InvalidArgument("mi_greedy_select: budget " + std::to_string(budget) + " exceeds N = " +
                          std::to_string(n));
  }
  if (reference.empty()) throw InvalidArgument("mi_greedy_select: empty reference set");
  validate_noise_covariance(noise, kernel.output_dim());
  const std::size_t dz = data.state_dim() + data.input_dim();
  PointMatrix R(static_cast<Eigen::Index>(reference.size()), static_cast<Eigen::Index>(dz));
  for (std::size_t r = 0; r < reference.size(); ++r) {
    if (static_cast<std::size_t>(reference[r].size()) != dz) {
      throw InvalidArgument("mi_greedy_select: reference point has wrong dimension");
    }
    R.row(static_cast<Eigen::Index>(r)) = reference[r].transpose();
  }
  const PointMatrix Z = data.inputs();
  const Matrix& A = kernel.A();
  const auto dx = static_cast<Eigen::Index>(kernel.output_dim());
  const auto nr = static_cast<Eigen::Index>(reference.size());
  const std::size_t df = kernel.latent_dim();

  // Latent covariances between data points and between data and references.
  std::vector<Matrix> k_dd(df), k_dr(df);
  for (std::size_t i = 0; i < df; ++i) {
    k_dd[i] = latent_gram(kernel.kernel(i), Z);
    k_dr[i].resize(Z.rows(), nr);
    for (Eigen::Index s = 0; s < Z.rows(); ++s) {
      for (Eigen::Index r = 0; r < nr; ++r) {
        k_dr[i](s, r) = kernel.kernel(i).eval_unchecked(Z.row(s).data(), R.row(r).data());
      }
    }
  }
  double prior_total = 0.0;
  for (Eigen::Index r = 0; r < nr; ++r) prior_total += coreg_eval(kernel, R.row(r).transpose(), R.row(r).transpose()).trace();

  const Matrix sym_noise = 0.5 * (noise + noise.transpose());
  auto total_variance = [&](const std::vector<std::size_t>& subset) {
    const auto m = static_cast<Eigen::Index>(subset.size());
    Matrix G = Matrix::Zero(dx * m, dx * m);
    Matrix C = Matrix::Zero(dx * m, dx * nr);
    for (std::size_t i = 0; i < df; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      Matrix kss(m, m), ksr(m, nr);
      for (Eigen::Index a = 0; a < m; ++a) {
        const auto ia = static_cast<Eigen::Index>(subset[static_cast<std::size_t>(a)]);
        ksr.row(a) = k_dr[i].row(ia);
        for (Eigen::Index b = 0; b < m; ++b) {
          kss(a, b) = k_dd[i](ia, static_cast<Eigen::Index>(subset[static_cast<std::size_t>(b)]));
        }
      }
      for (Eigen::Index p = 0; p < dx; ++p) {
        for (Eigen::Index q = 0; q < dx; ++q) {
          const double b = A(p, col) * A(q, col);
          if (b == 0.0) continue;
          G.block(p * m, q * m, m, m) += b * kss;
          // Reference columns are ordered r * dx + q.
          for (Eigen::Index r = 0; r < nr; ++r) C.col(r * dx + q).segment(p * m, m) += b * ksr.col(r);
        }
      }
    }
    for (Eigen::Index p = 0; p < dx; ++p) {
      for (Eigen::Index q = 0; q < dx; ++q) {
        if (sym_noise(p, q) != 0.0) G.block(p * m, q * m, m, m).diagonal().array() += sym_noise(p, q);
      }
    }
    const auto factor = factorize_with_jitter(G);
    return prior_total - factor.llt.matrixL().solve(C).squaredNorm();
  };

  std::vector<std::size_t> chosen;
  std::vector<bool> taken(n, false);
  for (std::size_t pick = 0; pick < budget; ++pick) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_index = n;
    std::vector<std::size_t> trial = chosen;
    trial.push_back(0);
    for (std::size_t c = 0; c < n; ++c) {
      if (taken[c]) continue;
      trial.back() = c;
      const double total = total_variance(trial);
      if (total < best) {
        best = total;
        best_index = c;
      }
    }
    taken[best_index] = true;
    chosen.push_back(best_index);
    if (variance_trace) variance_trace->push_back(best);
  }
  return chosen;
}

}  // namespace rhogap
