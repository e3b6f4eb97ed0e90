#include "rfs/errors.hpp"
#include "rfs/lmb_filter.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rfs;
using rfs::test::bernoulli;

namespace
{

constexpr double kArea = 1000.0 * 1000.0;

SensorModel sensor(double p_detect = 0.99)
{
  return SensorModel::position_sensor(25.0, p_detect, 10.0, kArea);
}

GaussianMixtured track_density(Eigen::Vector4d const& mean, double pos_var, double vel_var = 25.0)
{
  return test::single(test::gauss4(mean, Eigen::Vector4d(pos_var, pos_var, vel_var, vel_var)));
}

/// Exact existence probabilities by enumerating every track state (absent, missed, or one measurement).
std::vector<double> brute_force_existence(LmbDensity const& l, std::vector<Eigen::VectorXd> const& Z,
                                          SensorModel const& s)
{
  std::size_t const n = l.components.size();
  std::size_t const m = Z.size();
  double const kappa = s.clutter_density;
  std::vector<double> present(n, 0.0);
  double total = 0.0;
  std::vector<std::size_t> state(n, 0);  // 0 absent, 1 missed, 2 + j detected by z_j
  std::size_t const options = m + 2;
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i)
    combos *= options;
  for (std::size_t code = 0; code < combos; ++code)
  {
    std::size_t c = code;
    std::vector<char> used(m, 0);
    bool ok = true;
    double w = 1.0;
    for (std::size_t i = 0; i < n && ok; ++i)
    {
      state[i] = c % options;
      c /= options;
      double const r = l.components[i].r;
      if (state[i] == 0)
        w *= 1.0 - r;
      else if (state[i] == 1)
        w *= r * (1.0 - s.p_detect);
      else
      {
        std::size_t const j = state[i] - 2;
        if (used[j])
          ok = false;
        used[j] = 1;
        auto const u = kalman_update(l.components[i].p[0].gaussian, Z[j], s.H, s.R);
        w *= r * s.p_detect * std::exp(u.log_likelihood) / kappa;
      }
    }
    if (!ok)
      continue;
    total += w;
    for (std::size_t i = 0; i < n; ++i)
      if (state[i] != 0)
        present[i] += w;
  }
  for (auto& p : present)
    p /= total;
  return present;
}

}  // namespace

TEST(LmbUpdate, MissOnlyExistence)
{
  // Oracle: r(1 - pD) / (1 - r pD) with r = 0.5, pD = 0.99.
  auto const l = make_lmb({bernoulli(1, 1, 0.5, track_density(Eigen::Vector4d::Zero(), 100.0))});
  auto const u = lmb_update(l, {}, sensor());
  ASSERT_EQ(u.posterior.components.size(), 1u);
  EXPECT_NEAR(u.posterior.components[0].r, 0.0099009900990099098, 1e-12);
  EXPECT_TRUE(u.assoc_prob.empty());
}

TEST(LmbUpdate, OneTrackOneMeasurementAtPredictedMean)
{
  auto const l = make_lmb({bernoulli(1, 1, 0.9, track_density(Eigen::Vector4d::Zero(), 25.0))});
  std::vector<Eigen::VectorXd> const Z{Eigen::Vector2d(0, 0)};
  auto const u = lmb_update(l, Z, sensor());
  ASSERT_EQ(u.posterior.components.size(), 1u);
  EXPECT_NEAR(u.posterior.components[0].r, 0.99543909432752109, 1e-9);
  ASSERT_EQ(u.assoc_prob.size(), 1u);
  EXPECT_NEAR(u.assoc_prob[0], 0.99502861281699795, 1e-9);
  EXPECT_GT(u.posterior.components[0].r, 0.99);
  EXPECT_GT(u.assoc_prob[0], 0.9);
}

TEST(LmbUpdate, MatchesExhaustiveEnumeration)
{
  std::mt19937_64 rng(12);
  SensorModel const s = sensor(0.9);
  for (int trial = 0; trial < 40; ++trial)
  {
    std::vector<BernoulliComponent> comps;
    std::size_t const n = 1 + rng() % 3;
    for (std::size_t i = 0; i < n; ++i)
    {
      Eigen::Vector4d const mean(test::uniform(rng, -40, 40), test::uniform(rng, -40, 40), 0, 0);
      comps.push_back(bernoulli(1, static_cast<std::uint32_t>(i + 1), test::uniform(rng, 0.1, 0.95),
                                track_density(mean, 100.0)));
    }
    auto const l = make_lmb(std::move(comps));
    std::vector<Eigen::VectorXd> Z;
    std::size_t const m = rng() % 4;
    for (std::size_t j = 0; j < m; ++j)
      Z.push_back(Eigen::Vector2d(test::uniform(rng, -40, 40), test::uniform(rng, -40, 40)));
    UpdateOptions opt;
    opt.gate = 1e9;
    opt.hypothesis_floor = 1e-14;
    auto const u = lmb_update(l, Z, s, opt);
    auto const expected = brute_force_existence(l, Z, s);
    ASSERT_EQ(u.posterior.components.size(), n);
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_NEAR(u.posterior.components[i].r, expected[i], 1e-9);
  }
}

TEST(LmbUpdate, ExistenceAndAssociationStayInUnitInterval)
{
  std::mt19937_64 rng(7);
  MotionModel const motion = MotionModel::constant_velocity(1.0, 5.0, 0.98);
  for (int trial = 0; trial < 1000; ++trial)
  {
    std::vector<BernoulliComponent> comps;
    std::size_t const n = rng() % 4;
    for (std::size_t i = 0; i < n; ++i)
    {
      Eigen::Vector4d const mean(test::uniform(rng, -200, 200), test::uniform(rng, -200, 200),
                                 test::uniform(rng, -5, 5), test::uniform(rng, -5, 5));
      comps.push_back(bernoulli(1, static_cast<std::uint32_t>(i + 1), test::uniform(rng, 0.0, 1.0),
                                track_density(mean, test::uniform(rng, 10, 900))));
    }
    auto const predicted = lmb_predict(make_lmb(std::move(comps)), motion, {});
    std::vector<Eigen::VectorXd> Z;
    std::size_t const m = rng() % 6;
    for (std::size_t j = 0; j < m; ++j)
      Z.push_back(Eigen::Vector2d(test::uniform(rng, -200, 200), test::uniform(rng, -200, 200)));
    auto const u = lmb_update(predicted, Z, sensor());
    for (auto const& c : u.posterior.components)
    {
      EXPECT_GE(c.r, 0.0);
      EXPECT_LE(c.r, 1.0);
    }
    for (double a : u.assoc_prob)
    {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0 + 1e-12);
    }
    auto const empty = lmb_update(predicted, {}, sensor());
    for (std::size_t i = 0; i < predicted.components.size(); ++i)
      EXPECT_LE(empty.posterior.components[i].r, predicted.components[i].r + 1e-15);
  }
}

TEST(LmbPredict, SurvivalScalesExistenceAndAppendsBirths)
{
  MotionModel const motion = MotionModel::constant_velocity(1.0, 5.0, 0.98);
  auto const l = make_lmb({bernoulli(1, 1, 0.5, track_density(Eigen::Vector4d(0, 0, 1, 2), 10.0))});
  auto const p = lmb_predict(l, motion, {bernoulli(2, 1, 0.1, track_density(Eigen::Vector4d::Zero(), 10.0))});
  ASSERT_EQ(p.components.size(), 2u);
  EXPECT_NEAR(p.components[0].r, 0.49, 1e-15);
  EXPECT_NEAR(p.components[0].p.mean()(0), 1.0, 1e-12);
  EXPECT_NEAR(p.components[0].p.mean()(1), 2.0, 1e-12);
  EXPECT_EQ(p.components[1].label, (Label{2, 1}));
  EXPECT_THROW(lmb_predict(l, motion, {bernoulli(1, 1, 0.1, track_density(Eigen::Vector4d::Zero(), 10.0))}),
               LabelCollisionError);
}

TEST(AdaptiveBirth, ExistenceFromUnassociatedShare)
{
  BirthModel model;
  model.kind = BirthModel::Kind::adaptive;
  model.expected_births = 0.8;
  model.r_max = 0.3;
  model.covariance = Eigen::Vector4d(900, 900, 400, 400).asDiagonal();
  std::vector<Eigen::VectorXd> const Z{Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)};
  auto const births = adaptive_birth(Z, {0.0, 0.5}, model, 7);
  ASSERT_EQ(births.size(), 2u);
  EXPECT_NEAR(births[0].r, 0.3, 1e-15);
  EXPECT_NEAR(births[1].r, 0.26666666666666666, 1e-15);
  EXPECT_EQ(births[1].label, (Label{7, 2}));
  EXPECT_NEAR(births[1].p.mean()(0), 3.0, 1e-15);
  EXPECT_NEAR(births[1].p.mean()(2), 0.0, 1e-15);
  EXPECT_TRUE(adaptive_birth(Z, {1.0, 1.0}, model, 7).empty());
  EXPECT_THROW(adaptive_birth(Z, {0.5}, model, 7), DimensionMismatchError);
}

TEST(PriorBirth, ActiveStepsAndLabels)
{
  BirthModel model;
  model.prior.push_back({0.1, track_density(Eigen::Vector4d::Zero(), 100.0), {}});
  model.prior.push_back({0.2, track_density(Eigen::Vector4d::Zero(), 100.0), {3}});
  EXPECT_EQ(prior_births(model, 2).size(), 1u);
  auto const b = prior_births(model, 3);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[1].label, (Label{3, 2}));
}

TEST(LmbFilter, ConfirmsPersistentObjectWithPerfectDetection)
{
  MotionModel const motion = MotionModel::constant_velocity(1.0, 5.0, 0.98);
  // Perfect detection, negligible clutter and a precise sensor.
  SensorModel const s = SensorModel::position_sensor(5.0, 1.0, 1e-3, kArea);
  BirthModel birth;
  birth.prior.push_back({0.1, track_density(Eigen::Vector4d::Zero(), 900.0, 400.0), {1}});
  LmbFilter filter(motion, s, birth);
  double r = 0;
  for (std::uint32_t k = 1; k <= 5; ++k)
  {
    auto const& post = filter.step(k, {Eigen::Vector2d(0, 0)});
    ASSERT_EQ(post.components.size(), 1u);
    r = post.components[0].r;
  }
  EXPECT_GT(r, 0.999);
  auto const est = extract_estimates(filter.posterior());
  ASSERT_EQ(est.size(), 1u);
  EXPECT_LT(est[0].state.head<2>().norm(), 5.0);
}

TEST(Truncate, DropsBelowThreshold)
{
  auto const l = make_lmb({bernoulli(1, 1, 1e-5, track_density(Eigen::Vector4d::Zero(), 1.0)),
                           bernoulli(1, 2, 0.5, track_density(Eigen::Vector4d::Zero(), 1.0))});
  EXPECT_EQ(lmb_truncate(l, 1e-4).components.size(), 1u);
  EXPECT_EQ(extract_estimates(l, 0.5).size(), 0u);
}
