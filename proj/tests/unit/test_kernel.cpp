#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rhogap/errors.hpp"
#include "rhogap/kernel.hpp"

using namespace rhogap;

TEST(SEKernel, ZeroDistanceGivesSignalVariance) {
  const SEKernelParams p(2.5, {0.7, 1.3}, {0, 1});
  Vector z(2);
  z << 0.3, -1.2;
  EXPECT_DOUBLE_EQ(se_eval(p, z, z), 2.5);
}

TEST(SEKernel, HandValue) {
  const auto p = SEKernelParams::isotropic(1.0, 1.0, 2);
  EXPECT_NEAR(se_eval(p, Vector::Zero(2), Vector::Ones(2)), std::exp(-1.0), 1e-15);
}

TEST(SEKernel, Symmetric) {
  std::mt19937_64 rng(1);
  const SEKernelParams p(1.3, {0.4, 2.0, 1.1}, {0, 1, 2});
  for (int k = 0; k < 100; ++k) {
    const Vector z = oracle::random_vector(rng, 3, -2, 2), zp = oracle::random_vector(rng, 3, -2, 2);
    EXPECT_EQ(se_eval(p, z, zp), se_eval(p, zp, z));
  }
}

TEST(SEKernel, InactiveDimsIgnored) {
  const SEKernelParams p(1.0, {0.5}, {1});
  Vector z(3), zp(3);
  z << 0.0, 0.2, 5.0;
  zp << 100.0, 0.2, -7.0;
  EXPECT_DOUBLE_EQ(se_eval(p, z, zp), 1.0);
}

TEST(SEKernel, RejectsBadParameters) {
  EXPECT_THROW(SEKernelParams(0.0, {1.0}, {0}), InvalidArgument);
  EXPECT_THROW(SEKernelParams(1.0, {-1.0}, {0}), InvalidArgument);
  EXPECT_THROW(SEKernelParams(1.0, {1.0, 1.0}, {0}), InvalidArgument);
  EXPECT_THROW(SEKernelParams(1.0, {1.0, 1.0}, {1, 1}), InvalidArgument);
  const auto p = SEKernelParams::isotropic(1.0, 1.0, 3);
  EXPECT_THROW(se_eval(p, Vector::Zero(2), Vector::Zero(2)), InvalidArgument);
}

TEST(CoregKernel, IdentityMixingIsDiagonal) {
  const CoregKernel k(Matrix::Identity(2, 2), {SEKernelParams::isotropic(1.0, 1.0, 2),
                                               SEKernelParams::isotropic(2.0, 0.5, 2)});
  Vector z(2), zp(2);
  z << 0.1, 0.2;
  zp << -0.3, 0.4;
  const Matrix K = coreg_eval(k, z, zp);
  EXPECT_DOUBLE_EQ(K(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(K(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(K(0, 0), se_eval(k.kernel(0), z, zp));
  EXPECT_DOUBLE_EQ(K(1, 1), se_eval(k.kernel(1), z, zp));
}

TEST(CoregKernel, BenchmarkMixingExpansion) {
  Matrix A(2, 2);
  A << 1, 0, -1, 1;
  const CoregKernel k(A, {SEKernelParams::isotropic(1.0, 0.8, 2), SEKernelParams::isotropic(1.5, 0.6, 2)});
  Vector z(2), zp(2);
  z << 0.5, -0.1;
  zp << 0.2, 0.3;
  const double k1 = se_eval(k.kernel(0), z, zp), k2 = se_eval(k.kernel(1), z, zp);
  const Matrix K = coreg_eval(k, z, zp);
  EXPECT_NEAR(K(0, 0), k1, 1e-15);
  EXPECT_NEAR(K(0, 1), -k1, 1e-15);
  EXPECT_NEAR(K(1, 0), -k1, 1e-15);
  EXPECT_NEAR(K(1, 1), k1 + k2, 1e-15);
}

TEST(CoregKernel, RejectsZeroColumn) {
  Matrix A(2, 2);
  A << 1, 0, 0, 0;
  EXPECT_THROW(CoregKernel(A, {SEKernelParams::isotropic(1, 1, 1), SEKernelParams::isotropic(1, 1, 1)}),
               InvalidArgument);
  EXPECT_THROW(CoregKernel(Matrix::Identity(2, 2), {SEKernelParams::isotropic(1, 1, 1)}), InvalidArgument);
}

TEST(CoregKernel, StackedMatrixIsPositiveSemidefinite) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto spec = oracle::random_spec(rng, 2 + trial % 2, 1 + trial % 3, 3);
    const CoregKernel k = spec.build();
    PointMatrix Z(10, 3);
    for (Eigen::Index r = 0; r < 10; ++r) Z.row(r) = oracle::random_vector(rng, 3, -2, 2).transpose();
    const Matrix G = gram(k, Z, Matrix::Zero(static_cast<Eigen::Index>(k.output_dim()),
                                             static_cast<Eigen::Index>(k.output_dim())));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * G.trace());
  }
}

TEST(Gram, SinglePointIndependentOutputs) {
  const CoregKernel k(Matrix::Identity(2, 2), {SEKernelParams::isotropic(1.0, 1.0, 2),
                                               SEKernelParams::isotropic(3.0, 1.0, 2)});
  PointMatrix Z(1, 2);
  Z << 0.4, -0.2;
  Matrix noise(2, 2);
  noise << 0.1, 0.0, 0.0, 0.2;
  const Matrix G = gram(k, Z, noise);
  EXPECT_DOUBLE_EQ(G(0, 0), 1.1);
  EXPECT_DOUBLE_EQ(G(1, 1), 3.2);
  EXPECT_DOUBLE_EQ(G(0, 1), 0.0);
}

TEST(Gram, SymmetricAndMatchesNaiveAssembly) {
  std::mt19937_64 rng(3);
  const auto spec = oracle::random_spec(rng, 2, 2, 3);
  const CoregKernel k = spec.build();
  std::vector<Vector> pts;
  PointMatrix Z(3, 3);
  for (Eigen::Index r = 0; r < 3; ++r) {
    pts.push_back(oracle::random_vector(rng, 3, -1, 1));
    Z.row(r) = pts.back().transpose();
  }
  const Matrix noise = oracle::random_spd(rng, 2, 0.05);
  const Matrix G = gram(k, Z, noise);
  EXPECT_EQ((G - G.transpose()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((G - oracle::naive_gram(spec, pts, noise)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Gram, RejectsInvalidNoise) {
  const CoregKernel k(Matrix::Identity(2, 2), {SEKernelParams::isotropic(1, 1, 1), SEKernelParams::isotropic(1, 1, 1)});
  PointMatrix Z(1, 1);
  Z << 0.0;
  Matrix bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(gram(k, Z, bad), InvalidArgument);
  bad << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(gram(k, Z, bad), InvalidArgument);
  EXPECT_THROW(gram(k, Z, Matrix::Identity(3, 3)), InvalidArgument);
}
