#include "rfs/ospa.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rfs;

namespace
{

std::vector<Eigen::VectorXd> points(std::initializer_list<std::pair<double, double>> pts)
{
  std::vector<Eigen::VectorXd> out;
  for (auto [x, y] : pts)
    out.push_back(Eigen::Vector2d(x, y));
  return out;
}

std::vector<Eigen::VectorXd> random_set(std::mt19937_64& rng, std::size_t n)
{
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(test::random_vector(rng, 2, -150, 150));
  return out;
}

}  // namespace

TEST(Ospa, OracleValues)
{
  // Oracle: brute force over all injections (see tests/oracles/derive_oracles.py).
  EXPECT_NEAR(ospa_distance(points({{0, 0}, {50, -20}}), points({{30, 0}})), 64.142135623730951, 1e-12);
  EXPECT_NEAR(ospa_distance(points({{0, 0}, {50, -20}, {400, 400}}), points({{30, 0}, {10, 10}}), {100.0, 2.0}),
              60.553007081949829, 1e-12);
}

TEST(Ospa, EdgeCases)
{
  EXPECT_EQ(ospa_distance({}, {}), 0.0);
  EXPECT_DOUBLE_EQ(ospa_distance(points({{1, 1}}), {}), 100.0);
  EXPECT_DOUBLE_EQ(ospa_distance(points({{1, 1}, {5, 5}}), points({{1, 1}, {5, 5}})), 0.0);
  EXPECT_THROW(ospa_distance({}, {}, {100.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(ospa_distance({}, {}, {0.0, 1.0}), std::invalid_argument);
}

TEST(Ospa, MetricProperties)
{
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 300; ++trial)
  {
    auto const x = random_set(rng, rng() % 5);
    auto const y = random_set(rng, rng() % 5);
    auto const z = random_set(rng, rng() % 5);
    double const dxy = ospa_distance(x, y);
    EXPECT_DOUBLE_EQ(dxy, ospa_distance(y, x));
    EXPECT_GE(dxy, 0.0);
    EXPECT_LE(dxy, 100.0 + 1e-12);
    EXPECT_LE(dxy, ospa_distance(x, z) + ospa_distance(z, y) + 1e-9);
    EXPECT_NEAR(ospa_distance(x, x), 0.0, 1e-12);
  }
}

TEST(Ospa, UsesOnlyPositionComponents)
{
  std::vector<Eigen::VectorXd> a{Eigen::Vector4d(0, 0, 5, 5)};
  std::vector<Eigen::VectorXd> b{Eigen::Vector4d(3, 4, -5, 9)};
  EXPECT_NEAR(ospa_distance(a, b), 5.0, 1e-12);
}
