#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "rhogap/benchmark_system.hpp"
#include "rhogap/bounds.hpp"
#include "rhogap/types.hpp"

namespace rhogap {

struct TraceRow {
  double t = 0.0;
  Vector x;
  Vector u;
  Vector x_ref;
  double V = 0.0;
  double vdot_nominal = 0.0;
  // NaN when the controller has no model or no bound parameters were given.
  double vdot_sigma = 0.0;
};

struct RolloutOptions {
  double T = 10.0;
  double dt = 1e-3;
  // Log every `log_stride`-th step; the steady-state MSE always uses every step.
  std::size_t log_stride = 1;
  bool record_trace = true;
  const UniformBoundParams* bounds = nullptr;
};

struct RolloutResult {
  std::vector<TraceRow> trace;
  // Mean of ||x - x_ref||^2 over steps with t in [T/2, T].
  double mse_steady_state = 0.0;
  double pred_time_us = 0.0;
  bool diverged = false;
  std::size_t steps = 0;
};

inline constexpr double kDivergenceNorm = 1e6;

// One classical RK4 step of the true closed loop x_dot = g(x, pi(x, t)).
Vector rk4_step(VectorRef x, double t, double dt, const TrackingController& controller);

RolloutResult rollout(const TrackingController& controller, VectorRef x0,
                      const RolloutOptions& options);

// Columns t,x1,x2,u1,u2,xref1,xref2,V,Vdot_nom,Vdot_sigma.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace rhogap
