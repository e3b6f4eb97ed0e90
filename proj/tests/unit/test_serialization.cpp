#include "rfs/errors.hpp"
#include "rfs/serialization.hpp"
#include "rfs/validation.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace rfs;
using rfs::test::bernoulli;
using rfs::test::gauss1;
using rfs::test::single;

namespace
{

std::filesystem::path temp_file(std::string const& name)
{
  auto const dir = std::filesystem::temp_directory_path() / "rfs_serialization_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void expect_same_mixture(GaussianMixtured const& a, GaussianMixtured const& b)
{
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k)
  {
    EXPECT_EQ(a[k].weight, b[k].weight);
    EXPECT_EQ(a[k].gaussian.mean(), b[k].gaussian.mean());
    EXPECT_EQ(a[k].gaussian.covariance(), b[k].gaussian.covariance());
  }
}

}  // namespace

TEST(Serialization, LmbRoundTripIsExact)
{
  auto const l = make_lmb({bernoulli(1, 2, 0.123456789012345, single(gauss1(1.0 / 3.0, 2.0 / 7.0))),
                           bernoulli(4, 1, 1e-300, single(gauss1(-5, 1)))});
  auto const path = temp_file("lmb.json");
  save_density(path, l);
  auto const back = std::get<LmbDensity>(load_density(path));
  ASSERT_EQ(back.components.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i)
  {
    EXPECT_EQ(back.components[i].label, l.components[i].label);
    EXPECT_EQ(back.components[i].r, l.components[i].r);
    expect_same_mixture(back.components[i].p, l.components[i].p);
  }
}

TEST(Serialization, GlmbAndGmbRoundTrip)
{
  std::mt19937_64 rng(1);
  auto const g = lmb_to_glmb(make_lmb({bernoulli(1, 1, 0.4, single(gauss1(0, 1))),
                                       bernoulli(1, 2, 0.7, single(gauss1(3, 2)))}));
  auto const gp = temp_file("glmb.json");
  save_density(gp, g);
  auto const g2 = std::get<GlmbDensity>(load_density(gp));
  EXPECT_EQ(g2.label_space, g.label_space);
  ASSERT_EQ(g2.hypotheses.size(), g.hypotheses.size());
  for (std::size_t h = 0; h < g.hypotheses.size(); ++h)
  {
    EXPECT_EQ(g2.hypotheses[h].labels, g.hypotheses[h].labels);
    EXPECT_EQ(g2.hypotheses[h].weight, g.hypotheses[h].weight);
  }

  auto const u = random_gmb(rng, 3);
  auto const up = temp_file("gmb.json");
  save_density(up, u);
  auto const u2 = std::get<GmbDensity>(load_density(up));
  auto const a = cardinality_distribution(u);
  auto const b = cardinality_distribution(u2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t n = 0; n < a.size(); ++n)
    EXPECT_EQ(a[n], b[n]);

  auto const m = random_mb(rng, 3);
  auto const mp = temp_file("mb.json");
  save_density(mp, m);
  EXPECT_EQ(kind_of(load_density(mp)), "mb");
}

TEST(Serialization, RejectsMalformedDocuments)
{
  EXPECT_THROW(density_from_json(nlohmann::json::parse(R"({"components": []})")), SchemaError);
  EXPECT_THROW(density_from_json(nlohmann::json::parse(R"({"kind": "lmb", "components": [], "extra": 1})")),
               SchemaError);
  EXPECT_THROW(density_from_json(nlohmann::json::parse(
                   R"({"kind": "lmb", "components": [{"label": [1, 1], "r": 2.0,
                      "density": [{"weight": 1, "mean": [0], "covariance": [[1]]}]}]})")),
               SchemaError);
  EXPECT_THROW(density_from_json(nlohmann::json::parse(
                   R"({"kind": "lmb", "components": [{"label": [1, 1], "r": 0.5,
                      "density": [{"weight": 1, "mean": [0, 0], "covariance": [[1]]}]}]})")),
               std::exception);
  EXPECT_THROW(density_from_json(nlohmann::json::parse(R"({"kind": "weird"})")), SchemaError);
}

TEST(Serialization, ReadJsonReportsFileOnParseError)
{
  auto const path = temp_file("broken.json");
  {
    std::ofstream f(path);
    f << "{ not json";
  }
  try
  {
    read_json(path);
    FAIL() << "expected a schema error";
  }
  catch (SchemaError const& e)
  {
    EXPECT_NE(std::string(e.what()).find("broken.json"), std::string::npos);
  }
}

TEST(Serialization, LoadsStateSets)
{
  auto const x = load_states(std::string(RFS_SOURCE_DIR) + "/fixtures/states_a.json");
  ASSERT_EQ(x.size(), 2u);
  EXPECT_EQ(x[1](0), 50.0);
  EXPECT_THROW(load_states(std::string(RFS_SOURCE_DIR) + "/fixtures/example1_sensor1.json"), SchemaError);
}
