#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rhogap/errors.hpp"
#include "rhogap/gp.hpp"

using namespace rhogap;

namespace {

struct Instance {
  oracle::KernelSpec spec;
  Matrix noise;
  std::vector<Vector> Z, Y;
  Dataset data{1, 0};
};

Instance random_instance(std::mt19937_64& rng, std::size_t dx, std::size_t df, std::size_t n) {
  Instance in;
  const std::size_t dz = dx + 1;
  in.spec = oracle::random_spec(rng, dx, df, dz);
  in.noise = oracle::random_spd(rng, dx, 0.05);
  in.data = Dataset(dx, 1);
  for (std::size_t k = 0; k < n; ++k) {
    in.Z.push_back(oracle::random_vector(rng, dz, -2, 2));
    in.Y.push_back(oracle::random_vector(rng, dx, -1, 1));
    in.data.add(LabeledSample{in.Z.back(), in.Y.back()});
  }
  return in;
}

PriorMean linear_prior(std::size_t df) {
  return [df](VectorRef z) {
    Vector f(static_cast<Eigen::Index>(df));
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = 0.3 * z(0) - 0.1 * static_cast<double>(i);
    return f;
  };
}

}  // namespace

TEST(Gp, ScalarOnePointClosedForm) {
  Dataset d(1, 0);
  d.add(LabeledSample{Vector::Zero(1), Vector::Ones(1)});
  const CoregKernel k(Matrix::Identity(1, 1), {SEKernelParams::isotropic(1.0, 1.0, 1)});
  const auto model = MultiOutputGP::fit(d, k, 0.1 * Matrix::Identity(1, 1), zero_prior_mean(1));
  // The factorization adds a small diagonal jitter; fold it into the closed form.
  const double denom = 1.1 + model.jitter();
  const auto post = model.posterior_g(Vector::Zero(1));
  EXPECT_NEAR(post.mean(0), 1.0 / denom, 1e-12);
  EXPECT_NEAR(post.covariance(0, 0), 1.0 - 1.0 / denom, 1e-12);
  const auto comp = model.posterior_component(Vector::Zero(1), 0);
  EXPECT_NEAR(comp.mean, 1.0 / denom, 1e-12);
  EXPECT_NEAR(comp.variance, 1.0 - 1.0 / denom, 1e-12);
}

TEST(Gp, EmptyDataRecoversPrior) {
  std::mt19937_64 rng(4);
  const auto spec = oracle::random_spec(rng, 2, 3, 3);
  const CoregKernel k = spec.build();
  const auto model = MultiOutputGP::fit(Dataset(2, 1), k, 0.01 * Matrix::Identity(2, 2), linear_prior(3));
  const Vector z = oracle::random_vector(rng, 3, -1, 1);
  const auto post = model.posterior_g(z);
  EXPECT_LE((post.mean - spec.A * linear_prior(3)(z)).norm(), 1e-14);
  EXPECT_LE((post.covariance - coreg_eval(k, z, z)).cwiseAbs().maxCoeff(), 1e-14);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto c = model.posterior_component(z, i);
    EXPECT_DOUBLE_EQ(c.variance, spec.signal_variance[i]);
  }
}

TEST(Gp, RefitIsBitwiseDeterministic) {
  std::mt19937_64 rng(5);
  const auto in = random_instance(rng, 2, 2, 15);
  const auto a = MultiOutputGP::fit(in.data, in.spec.build(), in.noise, linear_prior(2));
  const auto b = MultiOutputGP::fit(in.data, in.spec.build(), in.noise, linear_prior(2));
  EXPECT_EQ(a.weights(), b.weights());
}

TEST(Gp, InterpolatesInSmallNoiseLimit) {
  std::mt19937_64 rng(6);
  auto in = random_instance(rng, 1, 1, 5);
  in.spec.A = Matrix::Identity(1, 1);
  const auto model = MultiOutputGP::fit(in.data, in.spec.build(), 1e-10 * Matrix::Identity(1, 1),
                                        zero_prior_mean(1));
  for (std::size_t n = 0; n < in.Z.size(); ++n) {
    EXPECT_NEAR(model.posterior_mean_g(in.Z[n])(0), in.Y[n](0), 1e-3);
  }
}

TEST(Gp, ComponentsMatchBlockOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dx = 1 + trial % 3, df = 1 + (trial / 3) % 3;
    const auto in = random_instance(rng, dx, df, 5 + static_cast<std::size_t>(trial));
    const auto model = MultiOutputGP::fit(in.data, in.spec.build(), in.noise, linear_prior(df));
    const Vector z = oracle::random_vector(rng, dx + 1, -2, 2);
    const auto ref = oracle::block_latent_posterior(in.spec, in.Z, in.Y, in.noise,
                                                    [&](const Vector& q) { return linear_prior(df)(q); }, z);
    const Vector mu = model.latent_means(z);
    const Vector var = model.latent_variances(z);
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
      EXPECT_NEAR(mu(i), ref.mean(i), 1e-8 * std::max(1.0, std::abs(ref.mean(i))));
      EXPECT_NEAR(var(i), ref.variance(i), 1e-8 * std::max(1.0, std::abs(ref.variance(i))));
    }
  }
}

TEST(Gp, JointPosteriorMatchesOracleAndComponents) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = random_instance(rng, 2, 3, 12);
    const auto model = MultiOutputGP::fit(in.data, in.spec.build(), in.noise, linear_prior(3));
    const Vector z = oracle::random_vector(rng, 3, -2, 2);
    const auto post = model.posterior_g(z);
    const auto ref = oracle::block_joint_posterior(in.spec, in.Z, in.Y, in.noise,
                                                   [](const Vector& q) { return linear_prior(3)(q); }, z);
    EXPECT_LE((post.mean - ref.mean).norm(), 1e-8 * std::max(1.0, ref.mean.norm()));
    EXPECT_LE((post.covariance - ref.covariance).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((in.spec.A * model.latent_means(z) - post.mean).norm(), 1e-8);
    EXPECT_LE((model.posterior_mean_g(z) - post.mean).norm(), 1e-12);
  }
}

TEST(Gp, OneSampleComponentReducesToScalarFormula) {
  Dataset d(2, 0);
  Vector z(2);
  z << 0.3, -0.4;
  d.add(LabeledSample{z, Vector::Ones(2)});
  const CoregKernel k(Matrix::Identity(2, 2), {SEKernelParams::isotropic(1.0, 1.0, 2),
                                               SEKernelParams::isotropic(1.0, 0.5, 2)});
  const auto model = MultiOutputGP::fit(d, k, 0.1 * Matrix::Identity(2, 2), zero_prior_mean(2));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(model.posterior_component(z, i).variance, 1.0 - 1.0 / (1.1 + model.jitter()), 1e-12);
  }
}

TEST(Gp, RejectsBadInputs) {
  std::mt19937_64 rng(9);
  const auto in = random_instance(rng, 2, 2, 4);
  const auto model = MultiOutputGP::fit(in.data, in.spec.build(), in.noise, linear_prior(2));
  EXPECT_THROW(model.posterior_g(Vector::Zero(5)), InvalidArgument);
  EXPECT_THROW(model.posterior_component(Vector::Zero(3), 2), InvalidArgument);
  EXPECT_THROW(MultiOutputGP::fit(in.data, in.spec.build(), Matrix::Identity(3, 3), linear_prior(2)),
               InvalidArgument);
}

TEST(Gp, JitterEscalatesOnDuplicateNoiselessPoints) {
  Dataset d(1, 0);
  d.add(LabeledSample{Vector::Zero(1), Vector::Ones(1)});
  d.add(LabeledSample{Vector::Zero(1), Vector::Ones(1)});
  const CoregKernel k(Matrix::Identity(1, 1), {SEKernelParams::isotropic(1.0, 1.0, 1)});
  const auto model = MultiOutputGP::fit(d, k, Matrix::Zero(1, 1), zero_prior_mean(1));
  EXPECT_GT(model.jitter(), 0.0);
  EXPECT_NEAR(model.posterior_mean_g(Vector::Zero(1))(0), 1.0, 1e-3);
}

TEST(Gp, FactorizationFailureReportsLastJitter) {
  Matrix G(2, 2);
  G << 3.0, 0.0, 0.0, -1.0;
  try {
    factorize_with_jitter(G);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_DOUBLE_EQ(e.last_jitter(), 1e-4);  // ceiling for mean diagonal 1
  }
}

TEST(PredictTiming, RejectsTooFewRepetitions) {
  Dataset d(1, 0);
  d.add(LabeledSample{Vector::Zero(1), Vector::Ones(1)});
  const auto model = MultiOutputGP::fit(d, CoregKernel(Matrix::Identity(1, 1), {SEKernelParams::isotropic(1, 1, 1)}),
                                        0.1 * Matrix::Identity(1, 1), zero_prior_mean(1));
  const std::vector<Vector> q = {Vector::Zero(1)};
  EXPECT_THROW(predict_timing(model, q, 0), InvalidArgument);
  const auto t = predict_timing(model, q, 10);
  EXPECT_GT(t.mean_us, 0.0);
}
