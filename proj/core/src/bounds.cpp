#include "rhogap/bounds.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "rhogap/errors.hpp"

namespace rhogap {

double Box::diameter() const { return (upper - lower).norm(); }

void Box::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw InvalidArgument("box: lower and upper corners must have equal, positive dimension");
  }
  for (Eigen::Index j = 0; j < lower.size(); ++j) {
    if (!(upper(j) > lower(j))) {
      throw InvalidArgument("box: axis " + std::to_string(j) + " has zero or negative width");
    }
  }
}

double compute_beta(double delta, double tau, double r0, std::size_t state_dim) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("beta: delta must lie in (0, 1)");
  if (!(tau > 0.0)) throw InvalidArgument("beta: tau must be positive");
  if (!(r0 > 0.0)) throw InvalidArgument("beta: r0 must be positive");
  if (state_dim == 0) throw InvalidArgument("beta: state dimension must be positive");
  return 2.0 * static_cast<double>(state_dim) * std::log1p(r0 / tau) - std::log(delta);
}

double compute_gamma(double tau, double beta, double lipschitz_mu, double lipschitz_f,
                     double lipschitz_var) {
  if (lipschitz_mu < 0.0 || lipschitz_f < 0.0 || lipschitz_var < 0.0) {
    throw InvalidArgument("gamma: Lipschitz constants must be nonnegative");
  }
  if (tau < 0.0) throw InvalidArgument("gamma: tau must be nonnegative");
  if (tau == 0.0) return 0.0;
  return (lipschitz_mu + lipschitz_f) * tau + std::sqrt(beta * lipschitz_var * tau);
}

UniformBoundParams UniformBoundParams::make(double delta, double tau, double r0,
                                            std::size_t state_dim, std::vector<double> lipschitz_f,
                                            std::vector<double> lipschitz_mu,
                                            std::vector<double> lipschitz_var) {
  if (lipschitz_f.size() != lipschitz_mu.size() || lipschitz_f.size() != lipschitz_var.size()) {
    throw InvalidArgument("uniform bound: Lipschitz lists must have one entry per output");
  }
  UniformBoundParams p;
  p.delta = delta;
  p.tau = tau;
  p.r0 = r0;
  p.state_dim = state_dim;
  p.beta = compute_beta(delta, tau, r0, state_dim);
  p.lipschitz_f = std::move(lipschitz_f);
  p.lipschitz_mu = std::move(lipschitz_mu);
  p.lipschitz_var = std::move(lipschitz_var);
  p.gamma.reserve(p.lipschitz_f.size());
  for (std::size_t i = 0; i < p.lipschitz_f.size(); ++i) {
    p.gamma.push_back(
        compute_gamma(tau, p.beta, p.lipschitz_mu[i], p.lipschitz_f[i], p.lipschitz_var[i]));
  }
  return p;
}

double compute_gamma(std::size_t i, const UniformBoundParams& params) {
  if (i >= params.lipschitz_f.size()) throw InvalidArgument("gamma: output index out of range");
  return compute_gamma(params.tau, params.beta, params.lipschitz_mu[i], params.lipschitz_f[i],
                       params.lipschitz_var[i]);
}

LipschitzEstimate estimate_lipschitz(const MultiOutputGP& model, const Box& domain,
                                     int grid_per_dim) {
  domain.validate();
  if (grid_per_dim < 3) throw InvalidArgument("estimate_lipschitz: grid_per_dim must be >= 3");
  const std::size_t dz = model.input_dim();
  if (domain.dim() != dz) {
    throw InvalidArgument("estimate_lipschitz: box dimension " + std::to_string(domain.dim()) +
                          " differs from model input dimension " + std::to_string(dz));
  }
  const std::size_t df = model.kernel().latent_dim();
  LipschitzEstimate est{std::vector<double>(df, 0.0), std::vector<double>(df, 0.0)};

  const Vector width = domain.upper - domain.lower;
  const Vector step = 1e-5 * width;
  std::vector<int> counter(dz, 0);
  Vector z(static_cast<Eigen::Index>(dz));
  Matrix grad_mu(static_cast<Eigen::Index>(df), static_cast<Eigen::Index>(dz));
  Matrix grad_var(static_cast<Eigen::Index>(df), static_cast<Eigen::Index>(dz));
  for (;;) {
    for (std::size_t j = 0; j < dz; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      z(jj) = domain.lower(jj) + width(jj) * counter[j] / (grid_per_dim - 1);
    }
    for (std::size_t j = 0; j < dz; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      Vector zp = z, zm = z;
      zp(jj) += step(jj);
      zm(jj) -= step(jj);
      grad_mu.col(jj) = (model.latent_means(zp) - model.latent_means(zm)) / (2.0 * step(jj));
      grad_var.col(jj) = (model.latent_variances(zp) - model.latent_variances(zm)) / (2.0 * step(jj));
    }
    for (std::size_t i = 0; i < df; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      est.mean[i] = std::max(est.mean[i], grad_mu.row(ii).norm());
      est.variance[i] = std::max(est.variance[i], grad_var.row(ii).norm());
    }
    std::size_t axis = 0;
    while (axis < dz && ++counter[axis] == grid_per_dim) counter[axis++] = 0;
    if (axis == dz) break;
  }
  for (std::size_t i = 0; i < df; ++i) {
    est.mean[i] *= kLipschitzSafetyFactor;
    est.variance[i] *= kLipschitzSafetyFactor;
  }
  return est;
}

double uniform_error_bound(double beta, double sigma, double gamma) {
  if (beta < 0.0 || sigma < 0.0 || gamma < 0.0) {
    throw InvalidArgument("uniform_error_bound: beta, sigma and gamma must be nonnegative");
  }
  return std::sqrt(beta) * sigma + gamma;
}

double uniform_error_bound(const MultiOutputGP& model, const UniformBoundParams& params,
                           VectorRef z, std::size_t i) {
  if (i >= params.gamma.size() || params.gamma.size() != model.kernel().latent_dim()) {
    throw InvalidArgument("uniform_error_bound: bound parameters do not match the model");
  }
  const double sigma = std::sqrt(model.posterior_component(z, i).variance);
  return uniform_error_bound(params.beta, sigma, params.gamma[i]);
}

double max_noise_eigenvalue(const Matrix& noise) {
  if (noise.size() == 0) return 0.0;
  const Matrix sym = 0.5 * (noise + noise.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

double gershgorin_denominator(const CoregKernel& kernel, const Matrix& noise, std::size_t M) {
  if (M == 0) throw InvalidArgument("M must be at least 1");
  const Matrix& A = kernel.A();
  double worst_row = 0.0;
  for (Eigen::Index m = 0; m < A.rows(); ++m) {
    double row = 0.0;
    for (Eigen::Index n = 0; n < A.cols(); ++n) {
      const double s2 = kernel.kernel(static_cast<std::size_t>(n)).signal_variance();
      row += std::abs(A(m, n)) * A.col(n).cwiseAbs().sum() * s2;
    }
    worst_row = std::max(worst_row, row);
  }
  return worst_row + max_noise_eigenvalue(noise) / static_cast<double>(M);
}

double variance_upper_bound(const CoregKernel& kernel, const Matrix& noise, std::size_t M,
                            double phi_sq, std::size_t j) {
  if (j >= kernel.latent_dim()) throw InvalidArgument("variance_upper_bound: index out of range");
  if (phi_sq < 0.0) throw InvalidArgument("variance_upper_bound: phi_sq must be nonnegative");
  const double s2 = kernel.kernel(j).signal_variance();
  const double col_sq = kernel.A().col(static_cast<Eigen::Index>(j)).squaredNorm();
  return s2 - s2 * s2 * std::exp(-phi_sq) * col_sq / gershgorin_denominator(kernel, noise, M);
}

double choose_tau(const MultiOutputGP& model, std::span<const Vector> validation, double delta,
                  double r0, const std::vector<double>& lipschitz_f,
                  const LipschitzEstimate& estimate, int min_decade) {
  const std::size_t df = model.kernel().latent_dim();
  if (lipschitz_f.size() != df || estimate.mean.size() != df || estimate.variance.size() != df) {
    throw InvalidArgument("choose_tau: Lipschitz lists must have one entry per output");
  }
  if (validation.empty()) throw InvalidArgument("choose_tau: no validation points");
  // Smallest posterior standard deviation per output over the validation set.
  std::vector<double> min_sigma(df, std::numeric_limits<double>::infinity());
  for (const auto& z : validation) {
    const Vector var = model.latent_variances(z);
    for (std::size_t i = 0; i < df; ++i) {
      min_sigma[i] = std::min(min_sigma[i], std::sqrt(var(static_cast<Eigen::Index>(i))));
    }
  }
  for (int k = 0; k >= min_decade; --k) {
    const double tau = r0 * std::pow(10.0, k);
    const double beta = compute_beta(delta, tau, r0, model.kernel().output_dim());
    bool ok = true;
    for (std::size_t i = 0; i < df && ok; ++i) {
      const double gamma =
          compute_gamma(tau, beta, estimate.mean[i], lipschitz_f[i], estimate.variance[i]);
      ok = std::sqrt(beta) * min_sigma[i] > gamma;
    }
    if (ok) return tau;
  }
  throw DomainError("choose_tau: no tau in r0 * 10^[" + std::to_string(min_decade) +
                    ", 0] satisfies sqrt(beta) sigma > gamma on the validation points");
}

}  // namespace rhogap
