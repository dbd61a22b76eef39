#include "rhogap/gp.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "rhogap/errors.hpp"

namespace rhogap {

namespace {
constexpr double kNegativeVarianceTolerance = 1e-8;
}

PriorMean zero_prior_mean(std::size_t latent_dim) {
  return [latent_dim](VectorRef) { return Vector::Zero(static_cast<Eigen::Index>(latent_dim)); };
}

JitteredFactorization factorize_with_jitter(const Matrix& G, JitterPolicy policy) {
  JitteredFactorization out;
  if (G.rows() == 0) return out;
  const double mean_diag = G.diagonal().mean();
  if (!(mean_diag > 0.0) || !std::isfinite(mean_diag)) {
    throw NumericalError("factorization: Gram matrix has nonpositive mean diagonal", 0.0);
  }
  double jitter = policy.initial * mean_diag;
  const double max_jitter = policy.maximum * mean_diag;
  for (;;) {
    Matrix Gj = G;
    Gj.diagonal().array() += jitter;
    out.llt.compute(Gj);
    const auto diag = out.llt.matrixLLT().diagonal();
    if (out.llt.info() == Eigen::Success && diag.allFinite() && (diag.array() > 0.0).all()) {
      out.jitter = jitter;
      return out;
    }
    if (jitter >= max_jitter * (1.0 - 1e-12)) {
      throw NumericalError("Gram matrix factorization failed with jitter " + std::to_string(jitter),
                           jitter);
    }
    jitter = std::min(jitter * policy.growth, max_jitter);
  }
}

MultiOutputGP::MultiOutputGP(Dataset data, CoregKernel kernel, Matrix noise, PriorMean prior_mean)
    : data_(std::move(data)),
      kernel_(std::move(kernel)),
      noise_(std::move(noise)),
      prior_mean_(std::move(prior_mean)) {}

MultiOutputGP MultiOutputGP::fit(Dataset data, CoregKernel kernel, Matrix noise,
                                 PriorMean prior_mean, JitterPolicy policy) {
  if (!prior_mean) throw InvalidArgument("fit: prior mean is empty");
  if (kernel.output_dim() != data.state_dim()) {
    throw InvalidArgument("fit: kernel has " + std::to_string(kernel.output_dim()) +
                          " outputs but data has state dimension " +
                          std::to_string(data.state_dim()));
  }
  if (kernel.min_input_dim() > data.state_dim() + data.input_dim()) {
    throw InvalidArgument("fit: kernel active dims exceed the input dimension");
  }
  validate_noise_covariance(noise, kernel.output_dim());

  MultiOutputGP model(std::move(data), std::move(kernel), std::move(noise), std::move(prior_mean));
  const auto n = static_cast<Eigen::Index>(model.data_.size());
  const auto dx = static_cast<Eigen::Index>(model.kernel_.output_dim());
  const auto df = static_cast<Eigen::Index>(model.kernel_.latent_dim());
  model.inputs_ = model.data_.inputs();
  model.alpha_ = Vector::Zero(dx * n);
  model.latent_weights_ = Matrix::Zero(df, n);
  if (n == 0) return model;

  Vector residual(dx * n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto& sample = model.data_[static_cast<std::size_t>(s)];
    const Vector prior_g = model.kernel_.A() * model.prior_at(sample.z);
    for (Eigen::Index m = 0; m < dx; ++m) residual(m * n + s) = sample.y(m) - prior_g(m);
  }

  auto factor = factorize_with_jitter(gram(model.kernel_, model.inputs_, model.noise_), policy);
  model.chol_ = std::move(factor.llt);
  model.jitter_ = factor.jitter;
  model.alpha_ = model.chol_.solve(residual);
  for (Eigen::Index i = 0; i < df; ++i) {
    for (Eigen::Index m = 0; m < dx; ++m) {
      const double a = model.kernel_.A()(m, i);
      if (a != 0.0) model.latent_weights_.row(i) += a * model.alpha_.segment(m * n, n).transpose();
    }
  }
  return model;
}

void MultiOutputGP::check_query(VectorRef z) const {
  if (static_cast<std::size_t>(z.size()) != input_dim()) {
    throw InvalidArgument("posterior query has dimension " + std::to_string(z.size()) +
                          ", model expects " + std::to_string(input_dim()));
  }
}

Vector MultiOutputGP::prior_at(VectorRef z) const {
  Vector f = prior_mean_(z);
  if (static_cast<std::size_t>(f.size()) != kernel_.latent_dim()) {
    throw InvalidArgument("prior mean returned " + std::to_string(f.size()) + " values, expected " +
                          std::to_string(kernel_.latent_dim()));
  }
  return f;
}

double MultiOutputGP::clamp_variance(double v, double scale) const {
  if (v < -kNegativeVarianceTolerance * std::max(1.0, scale)) {
    throw NumericalError("posterior variance " + std::to_string(v) + " is negative beyond tolerance",
                         jitter_);
  }
  return std::max(v, 0.0);
}

Vector MultiOutputGP::latent_means(VectorRef z) const {
  check_query(z);
  Vector mu = prior_at(z);
  const auto n = inputs_.rows();
  for (std::size_t i = 0; i < kernel_.latent_dim(); ++i) {
    const auto& k = kernel_.kernel(i);
    const auto row = static_cast<Eigen::Index>(i);
    double acc = 0.0;
    for (Eigen::Index s = 0; s < n; ++s) {
      acc += k.eval_unchecked(inputs_.row(s).data(), z.data()) * latent_weights_(row, s);
    }
    mu(row) += acc;
  }
  return mu;
}

Vector MultiOutputGP::posterior_mean_g(VectorRef z) const { return kernel_.A() * latent_means(z); }

GaussianPosterior MultiOutputGP::posterior_g(VectorRef z) const {
  check_query(z);
  const auto n = inputs_.rows();
  const auto dx = static_cast<Eigen::Index>(kernel_.output_dim());
  const Matrix& A = kernel_.A();
  GaussianPosterior post{posterior_mean_g(z), coreg_eval(kernel_, z, z)};
  if (n == 0) return post;

  // Cross covariance K(Z, z): row m N + s, column c holds k_{m,c}(z_s, z).
  Matrix cross = Matrix::Zero(dx * n, dx);
  for (std::size_t i = 0; i < kernel_.latent_dim(); ++i) {
    const Vector ki = latent_cross(kernel_.kernel(i), inputs_, z);
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index m = 0; m < dx; ++m) {
      for (Eigen::Index c = 0; c < dx; ++c) {
        const double b = A(m, col) * A(c, col);
        if (b != 0.0) cross.col(c).segment(m * n, n) += b * ki;
      }
    }
  }
  const Matrix v = chol_.matrixL().solve(cross);
  Matrix cov = post.covariance - v.transpose() * v;
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  const double scale = post.covariance.diagonal().cwiseAbs().maxCoeff();
  if (eig.eigenvalues().minCoeff() < 0.0) {
    Vector lambda = eig.eigenvalues();
    for (Eigen::Index j = 0; j < lambda.size(); ++j) lambda(j) = clamp_variance(lambda(j), scale);
    cov = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  }
  post.covariance = cov;
  return post;
}

ComponentPosterior MultiOutputGP::posterior_component(VectorRef z, std::size_t i) const {
  if (i >= kernel_.latent_dim()) {
    throw InvalidArgument("component index " + std::to_string(i) + " out of range (d_f = " +
                          std::to_string(kernel_.latent_dim()) + ")");
  }
  check_query(z);
  const auto& k = kernel_.kernel(i);
  const auto row = static_cast<Eigen::Index>(i);
  ComponentPosterior post{prior_at(z)(row), k.signal_variance()};
  const auto n = inputs_.rows();
  if (n == 0) return post;

  const Vector ki = latent_cross(k, inputs_, z);
  post.mean += ki.dot(latent_weights_.row(row).transpose());

  // a_i (x) k_i(Z, z) in output-major order.
  const auto dx = static_cast<Eigen::Index>(kernel_.output_dim());
  Vector v(dx * n);
  for (Eigen::Index m = 0; m < dx; ++m) v.segment(m * n, n) = kernel_.A()(m, row) * ki;
  chol_.matrixL().solveInPlace(v);
  post.variance = clamp_variance(k.signal_variance() - v.squaredNorm(), k.signal_variance());
  return post;
}

Vector MultiOutputGP::latent_variances(VectorRef z) const {
  check_query(z);
  const auto df = static_cast<Eigen::Index>(kernel_.latent_dim());
  Vector var(df);
  for (Eigen::Index i = 0; i < df; ++i) var(i) = kernel_.kernel(static_cast<std::size_t>(i)).signal_variance();
  const auto n = inputs_.rows();
  if (n == 0) return var;

  const auto dx = static_cast<Eigen::Index>(kernel_.output_dim());
  Matrix V(dx * n, df);
  for (Eigen::Index i = 0; i < df; ++i) {
    const Vector ki = latent_cross(kernel_.kernel(static_cast<std::size_t>(i)), inputs_, z);
    for (Eigen::Index m = 0; m < dx; ++m) V.col(i).segment(m * n, n) = kernel_.A()(m, i) * ki;
  }
  chol_.matrixL().solveInPlace(V);
  for (Eigen::Index i = 0; i < df; ++i) {
    var(i) = clamp_variance(var(i) - V.col(i).squaredNorm(), var(i));
  }
  return var;
}

TimingStats predict_timing(const MultiOutputGP& model, std::span<const Vector> queries,
                           int repetitions) {
  if (repetitions < 10) {
    throw InvalidArgument("predict_timing: repetitions must be at least 10, got " +
                          std::to_string(repetitions));
  }
  if (queries.empty()) throw InvalidArgument("predict_timing: no queries");
  using clock = std::chrono::steady_clock;
  std::vector<double> per_query_us;
  per_query_us.reserve(static_cast<std::size_t>(repetitions));
  volatile double sink = 0.0;
  for (int r = 0; r < repetitions; ++r) {
    double acc = 0.0;
    const auto start = clock::now();
    for (const auto& z : queries) acc += model.posterior_mean_g(z)(0);
    const auto stop = clock::now();
    sink = sink + acc;
    const double us = std::chrono::duration<double, std::micro>(stop - start).count();
    per_query_us.push_back(us / static_cast<double>(queries.size()));
  }
  TimingStats stats;
  for (double v : per_query_us) stats.mean_us += v;
  stats.mean_us /= static_cast<double>(per_query_us.size());
  for (double v : per_query_us) stats.std_us += (v - stats.mean_us) * (v - stats.mean_us);
  stats.std_us = std::sqrt(stats.std_us / static_cast<double>(per_query_us.size() - 1));
  return stats;
}

}  // namespace rhogap
