#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "rhogap/dataset.hpp"
#include "rhogap/kernel.hpp"
#include "rhogap/types.hpp"

namespace rhogap {

// Prior mean of the latent functions, z -> f_hat(z) in R^{d_f}.
using PriorMean = std::function<Vector(VectorRef z)>;
PriorMean zero_prior_mean(std::size_t latent_dim);

struct ComponentPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

struct GaussianPosterior {
  Vector mean;
  Matrix covariance;
};

// Diagonal jitter schedule, relative to the mean of diag(G).
struct JitterPolicy {
  double initial = 1e-10;
  double maximum = 1e-4;
  double growth = 10.0;
};

struct JitteredFactorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

// Cholesky factorization of G + jitter I, escalating jitter from
// policy.initial to policy.maximum (both relative to mean(diag(G))).
// Throws NumericalError reporting the last jitter tried.
JitteredFactorization factorize_with_jitter(const Matrix& G, JitterPolicy policy = {});

// Exact multi-output GP for g = A f with independent SE priors on each f_i.
// Immutable once fitted; all queries are const and thread-safe.
class MultiOutputGP {
 public:
  static MultiOutputGP fit(Dataset data, CoregKernel kernel, Matrix noise, PriorMean prior_mean,
                           JitterPolicy jitter = {});

  const Dataset& data() const { return data_; }
  const CoregKernel& kernel() const { return kernel_; }
  const Matrix& noise() const { return noise_; }
  const PriorMean& prior_mean() const { return prior_mean_; }
  std::size_t size() const { return data_.size(); }
  std::size_t input_dim() const { return data_.state_dim() + data_.input_dim(); }
  double jitter() const { return jitter_; }
  // G^{-1} (t - stacked A f_hat(Z)), output-major.
  const Vector& weights() const { return alpha_; }

  // Joint posterior of g(z).
  GaussianPosterior posterior_g(VectorRef z) const;
  // Mean of g(z) only; O(d_f N) kernel evaluations, no allocation beyond the
  // prior-mean call.
  Vector posterior_mean_g(VectorRef z) const;

  ComponentPosterior posterior_component(VectorRef z, std::size_t i) const;
  // mu_tilde(z) for all latent components.
  Vector latent_means(VectorRef z) const;
  // sigma_i^2(z) for all latent components (clamped at zero).
  Vector latent_variances(VectorRef z) const;

 private:
  MultiOutputGP(Dataset data, CoregKernel kernel, Matrix noise, PriorMean prior_mean);
  void check_query(VectorRef z) const;
  Vector prior_at(VectorRef z) const;
  double clamp_variance(double v, double scale) const;

  Dataset data_;
  CoregKernel kernel_;
  Matrix noise_;
  PriorMean prior_mean_;
  PointMatrix inputs_;
  Eigen::LLT<Matrix> chol_;
  Vector alpha_;
  // latent_weights_(i, n) = sum_m a_{m,i} alpha(m N + n).
  Matrix latent_weights_;
  double jitter_ = 0.0;
};

inline MultiOutputGP fit(Dataset data, CoregKernel kernel, Matrix noise, PriorMean prior_mean) {
  return MultiOutputGP::fit(std::move(data), std::move(kernel), std::move(noise),
                            std::move(prior_mean));
}
inline GaussianPosterior posterior_g(const MultiOutputGP& model, VectorRef z) {
  return model.posterior_g(z);
}
inline ComponentPosterior posterior_component(const MultiOutputGP& model, VectorRef z,
                                              std::size_t i) {
  return model.posterior_component(z, i);
}

struct TimingStats {
  double mean_us = 0.0;
  double std_us = 0.0;
};

// Wall-clock latency of one posterior-mean evaluation, averaged over the
// queries; mean and standard deviation are taken across repetitions.
TimingStats predict_timing(const MultiOutputGP& model, std::span<const Vector> queries,
                           int repetitions);

}  // namespace rhogap
