#include "rfs/diagnostics.hpp"
#include "rfs/errors.hpp"
#include "rfs/fusion.hpp"
#include "rfs/ospa.hpp"
#include "rfs/serialization.hpp"
#include "rfs/sim.hpp"
#include "rfs/validation.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

namespace
{

using namespace rfs;

struct SimulateArgs
{
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::string> overrides;
  std::vector<std::string> estimators;
};

struct FuseArgs
{
  std::vector<std::string> files;
  std::vector<double> weights;
  std::size_t home = 0;
  std::string out;
  double prune = 0.0;
  std::size_t cells = 40;
};

struct OspaArgs
{
  std::string x;
  std::string y;
  double cutoff = 100.0;
  double order = 1.0;
};

struct ValidateArgs
{
  std::uint64_t seed = 20240601;
  double scale = 1.0;
};

void setup_logging()
{
  auto logger = spdlog::stderr_color_mt("rfs-fusion");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  if (char const* level = std::getenv("RFS_FUSION_LOG"))
    spdlog::set_level(spdlog::level::from_str(level));
  else
    spdlog::set_level(spdlog::level::info);
}

std::vector<double> checked_weights(std::vector<double> weights, std::size_t n)
{
  if (weights.empty())
    weights.assign(n, 1.0 / static_cast<double>(n));
  validate_weights(weights, n);
  return weights;
}

/// Loads labeled densities as GLMBs (LMBs are expanded), optionally pruning hypotheses.
std::vector<GlmbDensity> load_labeled(std::vector<std::string> const& files, double prune)
{
  std::vector<GlmbDensity> out;
  for (auto const& f : files)
  {
    auto const d = load_density(f);
    GlmbDensity g;
    if (auto const* l = std::get_if<LmbDensity>(&d))
      g = lmb_to_glmb(*l);
    else if (auto const* gl = std::get_if<GlmbDensity>(&d))
      g = *gl;
    else
      throw SchemaError(f + ": labeled density (lmb or glmb) required, got " + kind_of(d));
    out.push_back(prune > 0 ? glmb_prune(g, prune) : std::move(g));
  }
  return out;
}

int run_simulate(SimulateArgs const& a)
{
  auto config = read_json(a.config);
  std::vector<std::string> overrides = a.overrides;
  if (!a.estimators.empty())
  {
    nlohmann::json list = a.estimators;
    overrides.push_back("estimators=" + list.dump());
  }
  config = apply_overrides(std::move(config), overrides);
  Scenario const sc = scenario_from_json(config);
  spdlog::info("scenario '{}': {} sensors, {} steps, {} runs on {} threads", sc.name, sc.sensors.size(), sc.duration,
               a.runs, a.jobs);
  auto const mc = monte_carlo(sc, a.runs, a.seed, a.jobs);
  write_outputs(a.out, sc, mc, a.seed, config, overrides);
  std::size_t errors = 0;
  for (auto const& run : mc.runs)
    for (auto const& s : run.steps)
      errors += !s.error.empty();
  if (errors > 0)
    spdlog::warn("{} step records carry a captured stage error (see metadata.json)", errors);
  auto const window = post_transient_steps(sc);
  for (auto est : sc.estimators)
    for (std::size_t node = 0; node < sc.sensors.size(); ++node)
      std::cout << fmt::format("{} node {}: post-transient mean OSPA {:.6g}\n", to_string(est), node,
                               mean_ospa(mc, est, node, window));
  return 0;
}

int run_fuse(FuseArgs const& a)
{
  if (a.files.size() < 2)
    throw std::invalid_argument("fuse: at least two density files are required");
  auto const weights = checked_weights(a.weights, a.files.size());
  auto const locals = load_labeled(a.files, a.prune);
  FusionConfig cfg;
  cfg.weights = weights;
  GlmbDensity const fused = r_gci_glmb_fuse(locals, cfg, a.home);

  std::vector<LmbDensity> lmbs;
  for (auto const& g : locals)
    lmbs.push_back(glmb_to_lmb(g));
  LmbDensity const classical = classical_gci_lmb_fuse(lmbs, cfg, a.home);

  std::filesystem::create_directories(a.out);
  save_density(std::filesystem::path(a.out) / "fused.json", fused);
  save_density(std::filesystem::path(a.out) / "classical_fused.json", classical);

  std::ofstream csv(std::filesystem::path(a.out) / "diagnostics.csv");
  csv << DiagnosticsReport::csv_header() << ",note\n";
  try
  {
    auto const rep = diagnose_labeled(locals, weights, {0, 1}, a.cells);
    csv << rep.csv_row(0) << ",\n";
    std::cout << fmt::format("d_G {:.9g} (upper bound {:.9g})\n", rep.d_G, rep.d_G_upper);
  }
  catch (std::exception const& e)
  {
    spdlog::warn("diagnostics skipped: {}", e.what());
    csv << fmt::format("0,,,,,,,\"{}\"\n", e.what());
  }
  std::cout << fmt::format("fused yes-object probability (r-gci): {:.9g}\n", 1.0 - no_object_probability(fused));
  std::cout << fmt::format("fused yes-object probability (classical): {:.9g}\n",
                           1.0 - no_object_probability(classical));
  return 0;
}

int run_diagnose(FuseArgs const& a)
{
  if (a.files.size() < 2)
    throw std::invalid_argument("diagnose: at least two density files are required");
  auto const weights = checked_weights(a.weights, a.files.size());
  auto const locals = load_labeled(a.files, a.prune);
  auto const rep = diagnose_labeled(locals, weights, {0, 1}, a.cells);
  std::cout << DiagnosticsReport::csv_header() << '\n' << rep.csv_row(0) << '\n';
  std::cout << fmt::format("d_G {:.9g} upper bound {:.9g}\n", rep.d_G, rep.d_G_upper);
  std::cout << fmt::format("identity residual {:.3e}, yes-object residual {:.3e}\n", rep.identity_residual,
                           corollary2_check(rep));
  if (!a.out.empty())
  {
    std::filesystem::create_directories(a.out);
    std::ofstream csv(std::filesystem::path(a.out) / "diagnostics.csv");
    csv << DiagnosticsReport::csv_header() << '\n' << rep.csv_row(0) << '\n';
  }
  return 0;
}

int run_ospa(OspaArgs const& a)
{
  double const d = ospa_distance(load_states(a.x), load_states(a.y), OspaParams{a.cutoff, a.order});
  std::cout << fmt::format("{:.9g}\n", d);
  return 0;
}

int run_validate(ValidateArgs const& a)
{
  bool ok = true;
  for (auto const& r : run_all_suites(a.seed, a.scale))
  {
    std::cout << fmt::format("{} {}: {}\n", r.passed() ? "PASS" : "FAIL", r.name, r.detail);
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
  setup_logging();
  CLI::App app{"Robust GCI fusion of labeled multi-object posteriors"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run Monte-Carlo scenario evaluation");
  simulate->add_option("--config", sim.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Base seed");
  simulate->add_option("--runs", sim.runs, "Monte-Carlo runs")->check(CLI::PositiveNumber);
  simulate->add_option("--jobs", sim.jobs, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--set", sim.overrides, "Override key.path=value (repeatable)");
  simulate->add_option("--estimators", sim.estimators, "Estimators: local, r_gci, classical_gci")->delimiter(',');

  FuseArgs fuse;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fuse labeled densities with the robust pipeline");
  fuse_cmd->add_option("files", fuse.files, "Density files")->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--weights", fuse.weights, "Fusion weights summing to one")->delimiter(',');
  fuse_cmd->add_option("--home", fuse.home, "Sensor whose labels the fused density carries");
  fuse_cmd->add_option("--out", fuse.out, "Output directory")->required();
  fuse_cmd->add_option("--prune", fuse.prune, "Hypothesis pruning threshold applied to each input");
  fuse_cmd->add_option("--cells", fuse.cells, "Grid cells per axis for diagnostics");

  FuseArgs diag;
  auto* diagnose = app.add_subcommand("diagnose", "Label inconsistency diagnostics of labeled densities");
  diagnose->add_option("files", diag.files, "Density files")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--weights", diag.weights, "Fusion weights summing to one")->delimiter(',');
  diagnose->add_option("--prune", diag.prune, "Hypothesis pruning threshold applied to each input");
  diagnose->add_option("--cells", diag.cells, "Grid cells per axis");
  diagnose->add_option("--out", diag.out, "Optional output directory for diagnostics.csv");

  OspaArgs ospa;
  auto* ospa_cmd = app.add_subcommand("ospa", "OSPA distance between two state-set files");
  ospa_cmd->add_option("x", ospa.x, "First state set")->required()->check(CLI::ExistingFile);
  ospa_cmd->add_option("y", ospa.y, "Second state set")->required()->check(CLI::ExistingFile);
  ospa_cmd->add_option("--cutoff", ospa.cutoff, "Cutoff c")->check(CLI::PositiveNumber);
  ospa_cmd->add_option("--order", ospa.order, "Order p")->check(CLI::Range(1.0, 1e9));

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "Run the invariant suites");
  validate->add_option("--seed", val.seed, "Seed of the randomized instances");
  validate->add_option("--scale", val.scale, "Multiplier on the instance counts")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*simulate)
      return run_simulate(sim);
    if (*fuse_cmd)
      return run_fuse(fuse);
    if (*diagnose)
      return run_diagnose(diag);
    if (*ospa_cmd)
      return run_ospa(ospa);
    if (*validate)
      return run_validate(val);
  }
  catch (IncompatiblePosteriorsError const& e)
  {
    spdlog::error("{} (log normalizer {:.6g}, feasible pairs {}, hypotheses {})", e.what(), e.payload().log_normalizer,
                  e.payload().feasible_pairs, e.payload().hypotheses);
    return 3;
  }
  catch (std::exception const& e)
  {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
