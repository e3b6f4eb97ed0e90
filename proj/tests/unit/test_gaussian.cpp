#include "rfs/errors.hpp"
#include "rfs/gaussian.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rfs;
using rfs::test::gauss1;
using rfs::test::simpson;

TEST(Gaussian, DensityMatchesClosedForm)
{
  Gaussiand const g = gauss1(1.0, 4.0);
  Eigen::VectorXd x(1);
  x << 3.0;
  EXPECT_NEAR(g.density(x), std::exp(-0.5) / std::sqrt(2 * M_PI * 4.0), 1e-15);
}

TEST(Gaussian, RejectsBadCovariances)
{
  Eigen::Vector2d const m(0, 0);
  Eigen::Matrix2d asym;
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(Gaussiand(m, asym), std::domain_error);
  EXPECT_THROW(Gaussiand(m, Eigen::Matrix2d::Zero()), SingularMatrixError);
  EXPECT_THROW(Gaussiand(m, Eigen::Matrix3d::Identity()), DimensionMismatchError);
}

TEST(FractionalPower, HalfPowerOfStandardNormalMatchesQuadratureScale)
{
  // Oracle: integral of N(x; 0, 1)^0.5 by adaptive quadrature.
  auto const p = fractional_power(gauss1(0.0, 1.0), 0.5);
  EXPECT_NEAR(std::exp(p.log_scale), 2.2390302698404954, 1e-12);
  EXPECT_NEAR(p.gaussian.covariance()(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(p.gaussian.mean()(0), 0.0, 1e-14);
}

TEST(FractionalPower, ScaledDensityEqualsPointwisePower)
{
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial)
  {
    Gaussiand const g(test::random_vector(rng, 2, -3, 3), test::random_spd(rng, 2));
    double const omega = test::uniform(rng, 0.05, 1.0);
    auto const p = fractional_power(g, omega);
    for (int k = 0; k < 5; ++k)
    {
      Eigen::VectorXd const x = test::random_vector(rng, 2, -4, 4);
      EXPECT_NEAR(p.log_scale + p.gaussian.log_density(x), omega * g.log_density(x), 1e-10);
    }
  }
}

TEST(FractionalPower, UnitExponentIsIdentity)
{
  std::mt19937_64 rng(5);
  Gaussiand const g(test::random_vector(rng, 3, -2, 2), test::random_spd(rng, 3));
  auto const p = fractional_power(g, 1.0);
  EXPECT_NEAR(p.log_scale, 0.0, 1e-12);
  EXPECT_LT((p.gaussian.mean() - g.mean()).norm(), 1e-12);
  EXPECT_LT((p.gaussian.covariance() - g.covariance()).norm(), 1e-12);
}

TEST(GciFuse, EqualWeightUnitGaussians)
{
  // Oracle: quadrature of sqrt(N(x;0,1) N(x;2,1)) gives eta = e^{-1/2}, mean 1, variance 1.
  auto const r = gci_fuse(GaussianMixtured(gauss1(0, 1)), 0.5, GaussianMixtured(gauss1(2, 1)), 0.5);
  ASSERT_EQ(r.mixture.size(), 1u);
  EXPECT_NEAR(r.eta(), 0.60653065971263354, 1e-12);
  EXPECT_NEAR(r.mixture.mean()(0), 1.0, 1e-12);
  EXPECT_NEAR(r.mixture.covariance()(0, 0), 1.0, 1e-12);
}

TEST(GciFuse, SingleComponentsFollowInformationForm)
{
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial)
  {
    Gaussiand const a(test::random_vector(rng, 2, -5, 5), test::random_spd(rng, 2));
    Gaussiand const b(test::random_vector(rng, 2, -5, 5), test::random_spd(rng, 2));
    double const w = test::uniform(rng, 0.05, 0.95);
    auto const r = gci_fuse(GaussianMixtured(a), w, GaussianMixtured(b), 1.0 - w);
    Eigen::MatrixXd const ia = a.covariance().inverse();
    Eigen::MatrixXd const ib = b.covariance().inverse();
    Eigen::MatrixXd const info = w * ia + (1 - w) * ib;
    Eigen::VectorXd const mean = info.ldlt().solve(w * ia * a.mean() + (1 - w) * ib * b.mean());
    EXPECT_LT((r.mixture.covariance().inverse() - info).norm(), 1e-9 * info.norm());
    EXPECT_LT((r.mixture.mean() - mean).norm(), 1e-9);
  }
}

TEST(GciFuse, OneDimensionalMeanLiesOnSegment)
{
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial)
  {
    double const m1 = test::uniform(rng, -10, 10);
    double const m2 = test::uniform(rng, -10, 10);
    double const w = test::uniform(rng, 0.01, 0.99);
    auto const r = gci_fuse(GaussianMixtured(gauss1(m1, test::uniform(rng, 0.1, 5))), w,
                            GaussianMixtured(gauss1(m2, test::uniform(rng, 0.1, 5))), 1 - w);
    double const m = r.mixture.mean()(0);
    EXPECT_GE(m, std::min(m1, m2) - 1e-12);
    EXPECT_LE(m, std::max(m1, m2) + 1e-12);
  }
}

TEST(GciFuse, NormalizerMatchesQuadratureForSeparatedMixtures)
{
  // Powers are taken component-wise, which is exact when mixture components do not overlap.
  std::mt19937_64 rng(8);
  auto pt = [](double x) { return Eigen::VectorXd::Constant(1, x); };
  for (int trial = 0; trial < 20; ++trial)
  {
    GaussianMixtured p1, p2;
    double const a = test::uniform(rng, 0.2, 0.8);
    p1.add(a, gauss1(-20 + test::uniform(rng, -1, 1), test::uniform(rng, 0.5, 2)));
    p1.add(1 - a, gauss1(20 + test::uniform(rng, -1, 1), test::uniform(rng, 0.5, 2)));
    double const b = test::uniform(rng, 0.2, 0.8);
    p2.add(b, gauss1(-20 + test::uniform(rng, -1, 1), test::uniform(rng, 0.5, 2)));
    p2.add(1 - b, gauss1(20 + test::uniform(rng, -1, 1), test::uniform(rng, 0.5, 2)));
    double const w = test::uniform(rng, 0.2, 0.8);
    auto const r = gci_fuse(p1, w, p2, 1 - w);
    double const exact = simpson(
        [&](double x) { return std::pow(p1.density(pt(x)), w) * std::pow(p2.density(pt(x)), 1 - w); }, -60, 60,
        40000);
    EXPECT_NEAR(r.mixture.total_weight(), 1.0, 1e-12);
    EXPECT_NEAR(r.eta() / exact, 1.0, 1e-6);
  }
}

TEST(GciFuse, TwoDimensionalNormalizerMatchesQuadrature)
{
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial)
  {
    Gaussiand const a(test::random_vector(rng, 2, -1, 1), test::random_spd(rng, 2));
    Gaussiand const b(test::random_vector(rng, 2, -1, 1), test::random_spd(rng, 2));
    double const w = test::uniform(rng, 0.2, 0.8);
    auto const r = gci_fuse(GaussianMixtured(a), w, GaussianMixtured(b), 1 - w);
    double const exact = test::simpson2(
        [&](double x, double y) {
          Eigen::Vector2d const v(x, y);
          return std::exp(w * a.log_density(v) + (1 - w) * b.log_density(v));
        },
        -15, 15, 600);
    EXPECT_NEAR(r.eta(), exact, 1e-6);
  }
}

TEST(GciFuse, RejectsInvalidWeights)
{
  GaussianMixtured const p(gauss1(0, 1));
  EXPECT_THROW(gci_fuse(p, 0.6, p, 0.6), std::domain_error);
  EXPECT_THROW(gci_fuse(p, 0.0, p, 1.0), std::domain_error);
}

TEST(Kalman, PositionUpdateVarianceMatchesOracle)
{
  Eigen::Vector4d const m(0, 0, 0, 0);
  Gaussiand const prior = test::gauss4(m, Eigen::Vector4d(900, 900, 400, 400));
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2, 4);
  H(0, 0) = H(1, 1) = 1;
  Eigen::MatrixXd const R = 625.0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd const z = Eigen::Vector2d(10, -10);
  auto const u = kalman_update(prior, z, H, R);
  EXPECT_NEAR(u.gaussian.covariance()(0, 0), 368.85245901639342, 1e-9);
  EXPECT_NEAR(u.gaussian.covariance()(1, 1), 368.85245901639342, 1e-9);
  EXPECT_NEAR(u.gaussian.covariance()(2, 2), 400.0, 1e-9);
  EXPECT_NEAR(u.gaussian.mean()(0), 10.0 * 900.0 / 1525.0, 1e-12);
  double const s = 1525.0;
  EXPECT_NEAR(u.log_likelihood, -std::log(2 * M_PI * s) - 0.5 * (100.0 + 100.0) / s, 1e-12);
}

TEST(Kalman, PredictPropagatesMeanAndCovariance)
{
  Eigen::MatrixXd F = Eigen::MatrixXd::Identity(2, 2);
  F(0, 1) = 1.0;
  Eigen::MatrixXd const Q = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  Gaussiand const g(Eigen::Vector2d(1, 2), Eigen::Matrix2d::Identity());
  auto const p = kalman_predict(g, F, Q);
  EXPECT_NEAR(p.mean()(0), 3.0, 1e-15);
  EXPECT_NEAR(p.covariance()(0, 0), 2.5, 1e-15);
  EXPECT_NEAR(p.covariance()(0, 1), 1.0, 1e-15);
}

TEST(PruneMerge, MergingPreservesFirstTwoMomentsAndRenormalizes)
{
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial)
  {
    GaussianMixtured gm;
    for (int k = 0; k < 6; ++k)
      gm.add(test::uniform(rng, 0.1, 1.0), Gaussiand(test::random_vector(rng, 2, -0.3, 0.3), test::random_spd(rng, 2)));
    auto const merged = prune_and_merge(gm, 0.0, 1e6, 10);
    ASSERT_EQ(merged.size(), 1u);
    EXPECT_NEAR(merged.total_weight(), 1.0, 1e-12);
    EXPECT_LT((merged.mean() - gm.mean()).norm(), 1e-6);
    EXPECT_LT((merged.covariance() - gm.covariance()).norm(), 1e-6);
  }
}

TEST(PruneMerge, PrunesAndCaps)
{
  GaussianMixtured gm;
  gm.add(1e-7, gauss1(0, 1));
  for (int k = 0; k < 5; ++k)
    gm.add(1.0 + k, gauss1(100.0 * k, 1));
  auto const out = prune_and_merge(gm, 1e-5, 4.0, 3);
  EXPECT_EQ(out.size(), 3u);
  EXPECT_THROW(prune_and_merge(GaussianMixtured{}, 1e-5, 4.0, 3), DegenerateMixtureError);
}

TEST(Mixture, NormalizedRejectsZeroMass)
{
  GaussianMixtured gm;
  gm.add(0.0, gauss1(0, 1));
  EXPECT_THROW(normalized(gm), DegenerateMixtureError);
}
