#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rhogap/gp.hpp"
#include "rhogap/kernel.hpp"
#include "rhogap/types.hpp"

namespace rhogap {

// Axis-aligned box over the joint state/input space.
struct Box {
  Vector lower;
  Vector upper;

  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  // Euclidean diagonal, i.e. max ||z - z'|| over the box.
  double diameter() const;
  void validate() const;
};

// beta(tau) = 2 d_x log(1 + r0 / tau) - log(delta).
double compute_beta(double delta, double tau, double r0, std::size_t state_dim);

// gamma_i(tau) = (L_mu + L_f) tau + sqrt(beta L_var tau); zero at tau = 0.
double compute_gamma(double tau, double beta, double lipschitz_mu, double lipschitz_f,
                     double lipschitz_var);

struct UniformBoundParams {
  double delta = 0.05;
  double tau = 0.0;
  double r0 = 0.0;
  std::size_t state_dim = 0;
  std::vector<double> lipschitz_f;
  std::vector<double> lipschitz_mu;
  std::vector<double> lipschitz_var;
  double beta = 0.0;
  std::vector<double> gamma;

  // Validates inputs and fills in beta and gamma.
  static UniformBoundParams make(double delta, double tau, double r0, std::size_t state_dim,
                                 std::vector<double> lipschitz_f, std::vector<double> lipschitz_mu,
                                 std::vector<double> lipschitz_var);
  std::size_t latent_dim() const { return gamma.size(); }
};

double compute_gamma(std::size_t i, const UniformBoundParams& params);

// Finite-difference estimates of the Lipschitz constants of mu_i and sigma_i^2.
// This is an estimate, not a certificate.
struct LipschitzEstimate {
  std::vector<double> mean;
  std::vector<double> variance;
};

inline constexpr double kLipschitzSafetyFactor = 1.1;

// Supremum of central-difference gradient norms of mu_i and sigma_i^2 over a
// regular grid with `grid_per_dim` points per axis, times 1.1.
LipschitzEstimate estimate_lipschitz(const MultiOutputGP& model, const Box& domain,
                                     int grid_per_dim);

// sqrt(beta) sigma + gamma.
double uniform_error_bound(double beta, double sigma, double gamma);
double uniform_error_bound(const MultiOutputGP& model, const UniformBoundParams& params,
                           VectorRef z, std::size_t i);

double max_noise_eigenvalue(const Matrix& noise);

// max_m sum_n sum_j |a_{m,n} a_{j,n}| s_{f_n}^2 + lambda_max(noise) / M, the
// Gershgorin bound on the largest eigenvalue of an M-sample Gram matrix
// divided by M.
double gershgorin_denominator(const CoregKernel& kernel, const Matrix& noise, std::size_t M);

// Upper bound on sigma_j^2 at a point whose M-fill distance (for output j)
// is sqrt(phi_sq).
double variance_upper_bound(const CoregKernel& kernel, const Matrix& noise, std::size_t M,
                            double phi_sq, std::size_t j);

// Largest tau = r0 10^k, k = 0, -1, ..., min_decade, with
// sqrt(beta(tau)) sigma_i(z) > gamma_i(tau) for every output and every
// validation point. Throws DomainError when no candidate qualifies.
double choose_tau(const MultiOutputGP& model, std::span<const Vector> validation, double delta,
                  double r0, const std::vector<double>& lipschitz_f,
                  const LipschitzEstimate& estimate, int min_decade = -12);

}  // namespace rhogap
