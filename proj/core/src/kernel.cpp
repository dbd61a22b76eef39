#include "rhogap/kernel.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "rhogap/errors.hpp"

namespace rhogap {

SEKernelParams::SEKernelParams(double signal_variance, std::vector<double> length_scales,
                               std::vector<std::size_t> active_dims)
    : signal_variance_(signal_variance),
      length_scales_(std::move(length_scales)),
      active_dims_(std::move(active_dims)) {
  if (!(signal_variance_ > 0.0) || !std::isfinite(signal_variance_)) {
    throw InvalidArgument("SE kernel: signal variance must be positive and finite");
  }
  if (length_scales_.size() != active_dims_.size()) {
    throw InvalidArgument("SE kernel: " + std::to_string(length_scales_.size()) +
                          " length scales for " + std::to_string(active_dims_.size()) +
                          " active dims");
  }
  for (std::size_t j = 0; j < active_dims_.size(); ++j) {
    if (j > 0 && active_dims_[j] <= active_dims_[j - 1]) {
      throw InvalidArgument("SE kernel: active dims must be strictly increasing");
    }
    if (!(length_scales_[j] > 0.0) || !std::isfinite(length_scales_[j])) {
      throw InvalidArgument("SE kernel: length scales must be positive and finite");
    }
  }
}

SEKernelParams SEKernelParams::isotropic(double signal_variance, double length_scale,
                                         std::size_t dim) {
  std::vector<std::size_t> dims(dim);
  for (std::size_t j = 0; j < dim; ++j) dims[j] = j;
  return SEKernelParams(signal_variance, std::vector<double>(dim, length_scale), std::move(dims));
}

double SEKernelParams::scaled_sq_distance(VectorRef z, VectorRef zp) const {
  if (z.size() != zp.size()) {
    throw InvalidArgument("SE kernel: points have different dimensions (" +
                          std::to_string(z.size()) + " vs " + std::to_string(zp.size()) + ")");
  }
  if (static_cast<std::size_t>(z.size()) < min_input_dim()) {
    throw InvalidArgument("SE kernel: point dimension " + std::to_string(z.size()) +
                          " does not cover active dim " + std::to_string(min_input_dim() - 1));
  }
  return scaled_sq_distance_unchecked(z.data(), zp.data());
}

double SEKernelParams::eval_unchecked(const double* z, const double* zp) const {
  return signal_variance_ * std::exp(-0.5 * scaled_sq_distance_unchecked(z, zp));
}

double se_eval(const SEKernelParams& params, VectorRef z, VectorRef zp) {
  return params.signal_variance() * std::exp(-0.5 * params.scaled_sq_distance(z, zp));
}

CoregKernel::CoregKernel(Matrix A, std::vector<SEKernelParams> kernels)
    : A_(std::move(A)), kernels_(std::move(kernels)) {
  if (A_.rows() == 0 || A_.cols() == 0) {
    throw InvalidArgument("coregionalization matrix must be non-empty");
  }
  if (static_cast<std::size_t>(A_.cols()) != kernels_.size()) {
    throw InvalidArgument("coregionalization matrix has " + std::to_string(A_.cols()) +
                          " columns but " + std::to_string(kernels_.size()) + " kernels given");
  }
  if (!A_.allFinite()) throw InvalidArgument("coregionalization matrix has non-finite entries");
  for (Eigen::Index i = 0; i < A_.cols(); ++i) {
    if (A_.col(i).cwiseAbs().maxCoeff() == 0.0) {
      throw InvalidArgument("column " + std::to_string(i) +
                            " of the coregionalization matrix is zero");
    }
  }
}

std::size_t CoregKernel::min_input_dim() const {
  std::size_t d = 0;
  for (const auto& k : kernels_) d = std::max(d, k.min_input_dim());
  return d;
}

Matrix CoregKernel::coregionalization(std::size_t i) const {
  const auto a = A_.col(static_cast<Eigen::Index>(i));
  return a * a.transpose();
}

Matrix coreg_eval(const CoregKernel& kernel, VectorRef z, VectorRef zp) {
  const auto df = kernel.latent_dim();
  Vector k(static_cast<Eigen::Index>(df));
  for (std::size_t i = 0; i < df; ++i) k(static_cast<Eigen::Index>(i)) = se_eval(kernel.kernel(i), z, zp);
  return kernel.A() * k.asDiagonal() * kernel.A().transpose();
}

namespace {

void check_points(const SEKernelParams& params, const PointMatrix& Z) {
  if (Z.rows() > 0 && static_cast<std::size_t>(Z.cols()) < params.min_input_dim()) {
    throw InvalidArgument("input points have dimension " + std::to_string(Z.cols()) +
                          " but the kernel uses dim " + std::to_string(params.min_input_dim() - 1));
  }
}

}  // namespace

Matrix latent_gram(const SEKernelParams& params, const PointMatrix& Z) {
  check_points(params, Z);
  const Eigen::Index n = Z.rows();
  Matrix K(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    K(r, r) = params.signal_variance();
    for (Eigen::Index c = 0; c < r; ++c) {
      const double v = params.eval_unchecked(Z.row(r).data(), Z.row(c).data());
      K(r, c) = v;
      K(c, r) = v;
    }
  }
  return K;
}

Vector latent_cross(const SEKernelParams& params, const PointMatrix& Z, VectorRef z) {
  check_points(params, Z);
  if (Z.rows() > 0 && z.size() != Z.cols()) {
    throw InvalidArgument("query dimension " + std::to_string(z.size()) +
                          " differs from data dimension " + std::to_string(Z.cols()));
  }
  Vector k(Z.rows());
  for (Eigen::Index n = 0; n < Z.rows(); ++n) k(n) = params.eval_unchecked(Z.row(n).data(), z.data());
  return k;
}

void validate_noise_covariance(const Matrix& noise, std::size_t d) {
  if (static_cast<std::size_t>(noise.rows()) != d || static_cast<std::size_t>(noise.cols()) != d) {
    throw InvalidArgument("noise covariance must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (!noise.allFinite()) throw InvalidArgument("noise covariance has non-finite entries");
  const double scale = std::max(1.0, noise.cwiseAbs().maxCoeff());
  if ((noise - noise.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("noise covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(noise, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw InvalidArgument("noise covariance is not positive semidefinite");
  }
}

Matrix gram(const CoregKernel& kernel, const PointMatrix& Z, const Matrix& noise) {
  const auto dx = static_cast<Eigen::Index>(kernel.output_dim());
  validate_noise_covariance(noise, kernel.output_dim());
  const Eigen::Index n = Z.rows();
  Matrix G = Matrix::Zero(dx * n, dx * n);
  const Matrix& A = kernel.A();
  for (std::size_t i = 0; i < kernel.latent_dim(); ++i) {
    const Matrix Ki = latent_gram(kernel.kernel(i), Z);
    const auto col = static_cast<Eigen::Index>(i);
    for (Eigen::Index m = 0; m < dx; ++m) {
      for (Eigen::Index mp = 0; mp < dx; ++mp) {
        const double b = A(m, col) * A(mp, col);
        if (b != 0.0) G.block(m * n, mp * n, n, n) += b * Ki;
      }
    }
  }
  const Matrix sym_noise = 0.5 * (noise + noise.transpose());
  for (Eigen::Index m = 0; m < dx; ++m) {
    for (Eigen::Index mp = 0; mp < dx; ++mp) {
      if (sym_noise(m, mp) != 0.0) {
        G.block(m * n, mp * n, n, n).diagonal().array() += sym_noise(m, mp);
      }
    }
  }
  return G;
}

}  // namespace rhogap
