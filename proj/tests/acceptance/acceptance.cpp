// Acceptance harness: one PASS/FAIL line per criterion, tolerances and time budgets pinned here.
#include "rfs/diagnostics.hpp"
#include "rfs/fusion.hpp"
#include "rfs/serialization.hpp"
#include "rfs/sim.hpp"
#include "rfs/validation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

namespace
{

using namespace rfs;

constexpr std::uint64_t kSuiteSeed = 20240601;
constexpr std::uint64_t kScenarioSeed = 1;
constexpr std::size_t kMonteCarloRuns = 50;

struct Verdict
{
  bool pass = false;
  std::string detail;
};

struct Criterion
{
  int id;
  std::string name;
  double budget_seconds;  ///< <= 0 means no runtime limit
  std::function<Verdict()> check;
};

std::size_t worker_count()
{
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string source_path(std::string const& rel)
{
  return std::string(RFS_SOURCE_DIR) + "/" + rel;
}

Verdict from_suite(SuiteResult const& r)
{
  return {r.passed(), r.detail};
}

GlmbDensity load_pruned(std::string const& fixture, double gamma)
{
  auto const d = load_density(source_path("fixtures/" + fixture));
  return glmb_prune(lmb_to_glmb(std::get<LmbDensity>(d)), gamma);
}

Verdict example_one()
{
  double const gamma = 1e-6;
  auto const s1 = load_pruned("example1_sensor1.json", gamma);
  auto const s2 = load_pruned("example1_sensor2.json", gamma);
  FusionConfig cfg;
  cfg.weights = {0.5, 0.5};
  double const p_classical =
      1.0 - no_object_probability(classical_gci_lmb_fuse(glmb_to_lmb(s1), glmb_to_lmb(s2), cfg));
  double const p_robust = 1.0 - no_object_probability(r_gci_glmb_fuse({s1, s2}, cfg, 0));
  auto const rep = diagnose_labeled({s1, s2}, cfg.weights, {0, 1}, 40);
  bool const finite = !rep.d_G_infinite && !rep.d_G_upper_infinite;
  double const rel_gap = finite ? std::abs(rep.d_G_upper - rep.d_G) / rep.d_G_upper : 1.0;
  bool const pass = p_classical < 0.01 && p_robust > 0.5 && finite && rel_gap < 1e-3;
  return {pass, fmt::format("classical P_y {:.3e} (< 0.01), r-gci P_y {:.6f} (> 0.5), d_G {:.9g} vs bound {:.9g} "
                            "(relative gap {:.2e} < 1e-3)",
                            p_classical, p_robust, rep.d_G, rep.d_G_upper, rel_gap)};
}

Scenario load_scenario(std::string const& file, std::vector<std::string> const& overrides = {})
{
  return scenario_from_json(apply_overrides(read_json(source_path("scenarios/" + file)), overrides));
}

std::vector<std::uint32_t> step_range(std::uint32_t first, std::uint32_t last)
{
  std::vector<std::uint32_t> out;
  for (std::uint32_t k = first; k <= last; ++k)
    out.push_back(k);
  return out;
}

Verdict scenario_one()
{
  auto const adaptive = load_scenario("scenario1_adaptive.json");
  auto const prior = load_scenario("scenario1_prior.json", {R"(estimators=["local","r_gci"])"});
  auto const mc_a = monte_carlo(adaptive, kMonteCarloRuns, kScenarioSeed, worker_count());
  auto const mc_p = monte_carlo(prior, kMonteCarloRuns, kScenarioSeed, worker_count());

  bool pass = true;
  std::string detail;
  auto const window = step_range(20, 60);
  for (std::size_t node = 0; node < adaptive.sensors.size(); ++node)
  {
    double const c = mean_cardinality_error(mc_a, Estimator::classical_gci, node, window);
    double const r = mean_cardinality_error(mc_a, Estimator::r_gci, node, window);
    pass = pass && c > 1.5 && r < 0.5;
    detail += fmt::format("(a) node {}: C-GCI |card err| {:.3f} (> 1.5), R-GCI {:.3f} (< 0.5); ", node, c, r);
  }
  auto const post = post_transient_steps(prior);
  double best_local = std::numeric_limits<double>::infinity();
  for (std::size_t node = 0; node < prior.sensors.size(); ++node)
    best_local = std::min(best_local, mean_ospa(mc_p, Estimator::local, node, post));
  for (std::size_t node = 0; node < prior.sensors.size(); ++node)
  {
    double const fused = mean_ospa(mc_p, Estimator::r_gci, node, post);
    pass = pass && fused < best_local;
    detail += fmt::format("(b) node {}: R-GCI OSPA {:.3f} m", node, fused);
    detail += node + 1 < prior.sensors.size() ? "; " : "";
  }
  detail += fmt::format(" vs best local {:.3f} m", best_local);
  return {pass, detail};
}

Verdict scenario_two()
{
  // One sensor: the local filter of node 0. Two and three sensors: the fused estimate of node 1
  // in a line network over the first k sensors (node 1 then fuses every sensor).
  auto const three = load_scenario("scenario2.json", {R"(estimators=["local","r_gci"])"});
  auto two_json = apply_overrides(read_json(source_path("scenarios/scenario2.json")),
                                  {R"(estimators=["r_gci"])", "topology=[[1],[0]]"});
  two_json["sensors"].erase(2);
  auto const two = scenario_from_json(two_json);
  auto const mc3 = monte_carlo(three, kMonteCarloRuns, kScenarioSeed, worker_count());
  auto const mc2 = monte_carlo(two, kMonteCarloRuns, kScenarioSeed, worker_count());
  auto const post = post_transient_steps(three);
  double const o1 = mean_ospa(mc3, Estimator::local, 0, post);
  double const o2 = mean_ospa(mc2, Estimator::r_gci, 1, post);
  double const o3 = mean_ospa(mc3, Estimator::r_gci, 1, post);
  bool const pass = o1 > o2 && o2 > o3 && o3 <= 0.7 * o1;
  return {pass, fmt::format("OSPA 1/2/3 sensors {:.3f} / {:.3f} / {:.3f} m (strictly decreasing, 3-sensor ratio "
                            "{:.3f} <= 0.7)",
                            o1, o2, o3, o3 / o1)};
}

std::string slurp(std::filesystem::path const& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism()
{
  auto const root = std::filesystem::temp_directory_path() / "rfs_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::vector<std::size_t> const jobs{1, 2, 4};
  for (auto j : jobs)
  {
    std::string const cmd = fmt::format(
        "{} simulate --config {} --runs 6 --seed 42 --set duration=25 --jobs {} --out {} > /dev/null 2>&1",
        RFS_FUSION_BIN, source_path("scenarios/scenario2.json"), j, (root / std::to_string(j)).string());
    if (std::system(cmd.c_str()) != 0)
      return {false, "simulate exited with an error: " + cmd};
  }
  std::size_t compared = 0;
  for (auto const& entry : std::filesystem::directory_iterator(root / "1"))
  {
    if (entry.path().extension() != ".csv")
      continue;
    auto const reference = slurp(entry.path());
    for (std::size_t k = 1; k < jobs.size(); ++k)
    {
      auto const other = root / std::to_string(jobs[k]) / entry.path().filename();
      if (slurp(other) != reference)
        return {false, fmt::format("{} differs between --jobs 1 and --jobs {}", entry.path().filename().string(),
                                   jobs[k])};
      ++compared;
    }
  }
  return {compared > 0, fmt::format("{} CSV comparisons across --jobs 1/2/4 byte-identical", compared)};
}

}  // namespace

int main()
{
  std::vector<Criterion> const criteria{
      {1, "labeled yes-object probability identity", 10.0,
       [] { return from_suite(yes_probability_identity_suite(200, kSuiteSeed)); }},
      {2, "divergence decomposition", 30.0,
       [] { return from_suite(divergence_decomposition_suite(200, kSuiteSeed + 1)); }},
      {3, "divergence bounds", 60.0, [] { return from_suite(divergence_bounds_suite(1000, kSuiteSeed + 2)); }},
      {4, "yes-object threshold", 0.0, [] { return from_suite(yes_probability_threshold_suite()); }},
      {5, "fusion oracle equivalence", 60.0, [] { return from_suite(fusion_oracle_suite(20, kSuiteSeed + 4)); }},
      {6, "moment preservation", 30.0, [] { return from_suite(moment_preservation_suite(100, kSuiteSeed + 5)); }},
      {7, "disagreeing-label example", 5.0, example_one},
      {8, "scenario 1 trend", 15.0 * 60.0, scenario_one},
      {9, "scenario 2 sensor-count trend", 30.0 * 60.0, scenario_two},
      {10, "OSPA oracle equivalence", 10.0, [] { return from_suite(ospa_oracle_suite(500, kSuiteSeed + 9)); }},
      {11, "simulate determinism across --jobs", 0.0, determinism},
  };

  int failures = 0;
  for (auto const& c : criteria)
  {
    auto const start = std::chrono::steady_clock::now();
    Verdict v;
    try
    {
      v = c.check();
    }
    catch (std::exception const& e)
    {
      v = {false, std::string("exception: ") + e.what()};
    }
    double const seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool const in_time = c.budget_seconds <= 0 || seconds < c.budget_seconds;
    bool const pass = v.pass && in_time;
    failures += !pass;
    std::string const timing = c.budget_seconds > 0
                                   ? fmt::format("{:.2f} s (budget {:.0f} s)", seconds, c.budget_seconds)
                                   : fmt::format("{:.2f} s", seconds);
    fmt::print("{} criterion {}: {} -- {} [{}]\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail, timing);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
