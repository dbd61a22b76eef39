#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "rhogap/types.hpp"

namespace rhogap {

// Squared-exponential kernel restricted to a subset of input coordinates.
// Coordinates outside `active_dims` behave as if their length scale were
// infinite: they never change the covariance or a weighted distance.
class SEKernelParams {
 public:
  SEKernelParams(double signal_variance, std::vector<double> length_scales,
                 std::vector<std::size_t> active_dims);

  // Convenience: all of the first `dim` coordinates active with one shared
  // length scale.
  static SEKernelParams isotropic(double signal_variance, double length_scale, std::size_t dim);

  double signal_variance() const { return signal_variance_; }
  const std::vector<double>& length_scales() const { return length_scales_; }
  const std::vector<std::size_t>& active_dims() const { return active_dims_; }

  // Smallest input dimension the kernel can be evaluated on.
  std::size_t min_input_dim() const { return active_dims_.empty() ? 0 : active_dims_.back() + 1; }

  // sum_j (z_j - z'_j)^2 / l_j^2 over active dims. Throws on dimension mismatch.
  double scaled_sq_distance(VectorRef z, VectorRef zp) const;

  // Hot path without dimension checks; both pointers must address at least
  // min_input_dim() values.
  double scaled_sq_distance_unchecked(const double* z, const double* zp) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < active_dims_.size(); ++j) {
      const double d = (z[active_dims_[j]] - zp[active_dims_[j]]) / length_scales_[j];
      acc += d * d;
    }
    return acc;
  }
  double eval_unchecked(const double* z, const double* zp) const;

 private:
  double signal_variance_;
  std::vector<double> length_scales_;
  std::vector<std::size_t> active_dims_;
};

// k(z, z') = s_f^2 exp(-1/2 sum_j (z_j - z'_j)^2 / l_j^2).
double se_eval(const SEKernelParams& params, VectorRef z, VectorRef zp);

// Matrix kernel K(z, z') = A diag(k_1, ..., k_df) A^T, A of shape d_x x d_f.
class CoregKernel {
 public:
  CoregKernel(Matrix A, std::vector<SEKernelParams> kernels);

  const Matrix& A() const { return A_; }
  const std::vector<SEKernelParams>& kernels() const { return kernels_; }
  const SEKernelParams& kernel(std::size_t i) const { return kernels_.at(i); }
  std::size_t output_dim() const { return static_cast<std::size_t>(A_.rows()); }  // d_x
  std::size_t latent_dim() const { return static_cast<std::size_t>(A_.cols()); }  // d_f
  std::size_t min_input_dim() const;

  // B_i = a_i a_i^T.
  Matrix coregionalization(std::size_t i) const;

 private:
  Matrix A_;
  std::vector<SEKernelParams> kernels_;
};

Matrix coreg_eval(const CoregKernel& kernel, VectorRef z, VectorRef zp);

// N x N matrix k_i(Z, Z) for points stored row-wise in Z.
Matrix latent_gram(const SEKernelParams& params, const PointMatrix& Z);
// Length-N vector k_i(Z, z).
Vector latent_cross(const SEKernelParams& params, const PointMatrix& Z, VectorRef z);

// (d_x N) x (d_x N) Gram matrix sum_i B_i (x) k_i(Z, Z) + noise (x) I_N in
// output-major order: row m * N + n belongs to output m and sample n, which
// matches targets stacked as [y_1^(1..N), y_2^(1..N), ...].
Matrix gram(const CoregKernel& kernel, const PointMatrix& Z, const Matrix& noise);

// Throws InvalidArgument unless `noise` is a symmetric PSD d x d matrix.
void validate_noise_covariance(const Matrix& noise, std::size_t d);

}  // namespace rhogap
