#pragma once

#include "rfs/fusion.hpp"
#include "rfs/lmb_filter.hpp"
#include "rfs/ospa.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rfs
{

struct TruthTrack
{
  std::uint32_t birth = 1;  ///< first step the object exists
  std::uint32_t death = 1;  ///< first step the object no longer exists
  Eigen::VectorXd state;    ///< state at the birth step
};

struct SensorConfig
{
  SensorModel model;
  std::size_t stream = 0;  ///< measurement stream id; sensors sharing an id see identical scans
};

enum class Estimator
{
  local,
  r_gci,
  classical_gci
};

std::string to_string(Estimator e);
Estimator estimator_from_string(std::string const& s);

struct DiagnosticsConfig
{
  bool enabled = false;
  std::vector<std::uint32_t> steps;  ///< steps at which node 0 and its first neighbour are analysed
  double min_existence = 0.01;       ///< Bernoulli components below this are left out of the snapshot
  std::size_t cells_per_axis = 40;
  std::size_t max_cardinality = 2;
};

struct Scenario
{
  std::string name;
  Eigen::Vector2d region_lo;
  Eigen::Vector2d region_hi;
  std::uint32_t duration = 0;
  double dt = 1.0;
  MotionModel motion;
  std::vector<TruthTrack> truth;
  std::vector<SensorConfig> sensors;
  BirthModel birth;
  UpdateOptions update;
  double truncation = 1e-4;
  double extraction_threshold = 0.5;
  FusionConfig fusion;  ///< weights unused: each node weighs its participants uniformly
  std::vector<std::vector<std::size_t>> topology;  ///< neighbours of each node
  std::vector<Estimator> estimators;
  OspaParams ospa;
  std::uint32_t settle_steps = 5;
  DiagnosticsConfig diagnostics;

  [[nodiscard]] double region_area() const;
};

/// Parses a scenario document; unknown keys or invalid values raise SchemaError naming the field.
Scenario scenario_from_json(nlohmann::json const& j);

/// Applies "a.b.0.c=value" overrides (value parsed as JSON, else taken as a string).
nlohmann::json apply_overrides(nlohmann::json config, std::vector<std::string> const& overrides);

/// FNV-1a 64-bit hash of the canonical JSON text, as 16 hex digits.
std::string config_hash(nlohmann::json const& config);

/// Purposes of independent random streams.
enum class StreamPurpose : std::uint64_t
{
  detection = 1,
  clutter = 2
};

/// Generator for one (run, stream, step, purpose) cell, derived from the base seed.
std::mt19937_64 make_stream(std::uint64_t base_seed, std::uint64_t run, std::uint64_t stream, std::uint64_t step,
                            StreamPurpose purpose);

struct TruthObject
{
  Label label;
  Eigen::VectorXd state;
};

/// Truth at steps 1..duration (index 0 unused): nominal noiseless trajectories, alive on [birth, death).
std::vector<std::vector<TruthObject>> generate_truth(Scenario const& sc);

/// One scan: detections of the truth with noise, plus uniform Poisson clutter, shuffled.
std::vector<Eigen::VectorXd> generate_measurements(std::vector<TruthObject> const& truth, SensorModel const& sensor,
                                                   Eigen::Vector2d const& region_lo, Eigen::Vector2d const& region_hi,
                                                   std::mt19937_64& detection_rng, std::mt19937_64& clutter_rng);

struct StepRecord
{
  std::uint32_t step = 0;
  std::size_t sensor = 0;
  Estimator estimator = Estimator::local;
  std::size_t card_true = 0;
  std::size_t card_est = 0;
  double ospa = 0.0;
  std::string error;  ///< non-empty when the stage failed; ospa is NaN then
};

struct DiagnosticsRecord
{
  std::uint32_t step = 0;
  std::string row;  ///< DiagnosticsReport CSV row, or empty when skipped
  std::string note;
};

struct RunRecord
{
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::vector<DiagnosticsRecord> diagnostics;
};

RunRecord run_network(Scenario const& sc, std::uint64_t base_seed, std::size_t run);

/// Steps excluded from post-transient averages: [e, e + settle) for every birth/death step e.
std::vector<std::uint32_t> post_transient_steps(Scenario const& sc);

struct MonteCarloResult
{
  std::vector<RunRecord> runs;  ///< in run order regardless of scheduling
};

/// Runs are independent and execute on `jobs` threads; results are deterministic.
MonteCarloResult monte_carlo(Scenario const& sc, std::size_t runs, std::uint64_t base_seed, std::size_t jobs);

/// Mean OSPA over runs and the given steps for one estimator at one node (NaN entries skipped).
double mean_ospa(MonteCarloResult const& mc, Estimator e, std::size_t sensor, std::vector<std::uint32_t> const& steps);

/// Mean |card_est - card_true| over runs and steps for one estimator at one node.
double mean_cardinality_error(MonteCarloResult const& mc, Estimator e, std::size_t sensor,
                              std::vector<std::uint32_t> const& steps);

/// Writes <estimator>.csv per estimator, aggregate.csv, diagnostics.csv (when enabled) and metadata.json.
void write_outputs(std::filesystem::path const& dir, Scenario const& sc, MonteCarloResult const& mc,
                   std::uint64_t seed, nlohmann::json const& config, std::vector<std::string> const& overrides);

}  // namespace rfs
