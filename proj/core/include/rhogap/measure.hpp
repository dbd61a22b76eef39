#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "rhogap/bounds.hpp"
#include "rhogap/dataset.hpp"
#include "rhogap/gp.hpp"
#include "rhogap/kernel.hpp"
#include "rhogap/types.hpp"

namespace rhogap {

// Lyapunov function V(x, t) >= 0 with its state gradient and time derivative.
struct LyapunovSpec {
  std::function<double(VectorRef x, double t)> value;
  std::function<Vector(VectorRef x, double t)> gradient;
  std::function<double(VectorRef x, double t)> time_derivative;
};

// Control law (x, t) -> u.
using Controller = std::function<Vector(VectorRef x, double t)>;

enum class StabilityMode { kStability, kExponential };

// How the second argument of the budget choice weighs the Lyapunov gradient:
// |sum_j a_{j,i} dV/dx_j| (kSignedSum) or sum_j |a_{j,i} dV/dx_j| (kAbsoluteSum).
enum class XiCap { kSignedSum, kAbsoluteSum };

// phibar^2 values at or above this are reported as +infinity.
inline constexpr double kPhibarInfinity = 1e3;

// Weighted M-fill distance of the query (x, u): the M-th smallest
// sqrt(sum_j (z_j - z_j^(n))^2 / l_{i,j}^2) over the samples, active dims only.
double fill_distance(const Dataset& data, VectorRef x, VectorRef u,
                     const SEKernelParams& kernel_i, std::size_t M);

// theta_i^2 = log(s_i^2 ||a_i||^2 / (gershgorin row bound + lambda_max / M)).
double theta_sq(const CoregKernel& kernel, const Matrix& noise, std::size_t M, std::size_t i);

// w_i = sum_j |a_{j,i} dV/dx_j| for every latent output.
Vector lyapunov_weights(const Matrix& A, VectorRef grad_v);

// grad V^T A mu_tilde(x, pi(x, t)) + dV/dt.
double vdot_nominal(VectorRef x, double t, const LyapunovSpec& lyapunov,
                    const MultiOutputGP& model, const Controller& controller);

// sum_i w_i (sqrt(beta) sigma_tilde_i(x) + gamma_i).
double vdot_uncertain(VectorRef x, double t, const LyapunovSpec& lyapunov,
                      const MultiOutputGP& model, const Controller& controller,
                      const UniformBoundParams& bounds);

struct XiValue {
  double value = 0.0;
  // True when the budget came out nonpositive: the point cannot be made
  // safe by data and is returned as a flagged zero.
  bool unsatisfiable = false;
};

// Budget xi_i from precomputed terms. `vdot_effective` is V_dot_nom, or
// V_dot_nom + V in exponential mode.
XiValue xi_from_terms(double vdot_effective, const Matrix& A, VectorRef grad_v, double beta,
                      double signal_variance_i, double nu, std::size_t i,
                      XiCap cap = XiCap::kSignedSum);

XiValue xi(VectorRef x, double t, std::size_t i, const LyapunovSpec& lyapunov,
           const MultiOutputGP& model, const Controller& controller,
           const UniformBoundParams& bounds, double nu, StabilityMode mode,
           XiCap cap = XiCap::kSignedSum);

// phibar_i^2 = -log(1 - xi^2 / (4 beta s^2 w^2)). Requires w > 0 and
// xi^2 < 4 beta s^2 w^2; throws DomainError otherwise. Returns +infinity at
// or above kPhibarInfinity.
double phibar_sq(double xi, double weight, double beta, double signal_variance);

struct RhoGapContext {
  std::shared_ptr<const MultiOutputGP> model;
  LyapunovSpec lyapunov;
  Controller controller;
  UniformBoundParams bounds;
  std::size_t M = 1;
  double nu = 1e-3;
  StabilityMode mode = StabilityMode::kStability;
  XiCap xi_cap = XiCap::kSignedSum;
  std::vector<double> theta_sq;

  // Builds the context and derives theta_sq from the model's kernel and noise.
  static RhoGapContext make(std::shared_ptr<const MultiOutputGP> model, LyapunovSpec lyapunov,
                            Controller controller, UniformBoundParams bounds, std::size_t M,
                            double nu, StabilityMode mode, XiCap cap = XiCap::kSignedSum);
};

// Data requirement of one output at one (x, t).
struct OutputRequirement {
  double xi = 0.0;
  bool unsatisfiable = false;
  double weight = 0.0;
  // phibar_i^2; 0 for unsatisfiable points, +infinity when no data is needed.
  double phibar_sq = 0.0;
};

// Everything rho depends on at (x, t) that does not depend on the subset.
struct PointRequirement {
  Vector x;
  Vector u;
  double t = 0.0;
  std::vector<OutputRequirement> outputs;
};

PointRequirement requirement_at(VectorRef x, double t, const RhoGapContext& ctx);

// sum_i max{0, fill_sq_i - phibar_i^2 - theta_i^2}; infinite phibar adds 0.
double rho_from(const std::vector<double>& fill_sq, const PointRequirement& req,
                const std::vector<double>& theta_sq);

struct RhoGapBreakdown {
  double rho = 0.0;
  std::vector<double> fill_sq;
  std::vector<double> phibar_sq;
};

RhoGapBreakdown rho_gap_breakdown(VectorRef x, double t, const Dataset& subset,
                                  const RhoGapContext& ctx);
double rho_gap(VectorRef x, double t, const Dataset& subset, const RhoGapContext& ctx);

// True iff fill_i^2 <= phibar_i^2 + theta_i^2 at (x, t). Throws DomainError
// when sqrt(beta) sigma_i(x) > gamma_i does not hold at x, with sigma_i from
// a GP fitted on `subset` using the context model's kernel, noise and prior.
bool certify_uncertainty_budget(VectorRef x, double t, std::size_t i, const Dataset& subset,
                                const RhoGapContext& ctx);

}  // namespace rhogap
