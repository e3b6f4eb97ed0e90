#pragma once

#include "rfs/diagnostics.hpp"
#include "rfs/labeled_rfs.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rfs
{

/// Outcome of one invariant suite: worst observed error against a pinned tolerance.
struct SuiteResult
{
  std::string name;
  std::size_t instances = 0;
  std::size_t failures = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string detail;

  [[nodiscard]] bool passed() const noexcept { return instances > 0 && failures == 0; }
};

/// Random labeled discrete densities on one shared space (2-3 sensors, random weights).
///
/// Each density is a GLMB-shaped table with a positive empty-set weight, random
/// label-set hypotheses and random cell densities (occasionally with holes), so
/// label disagreement across sensors is common.
WeightedDensities random_labeled_instance(std::mt19937_64& rng);

/// Random MB with up to `max_components` Bernoullis in `dim` dimensions.
MbDensity random_mb(std::mt19937_64& rng, std::size_t max_components, Eigen::Index dim = 1);

/// Random GMB over `indices` indices with several density sets and random hypotheses.
GmbDensity random_gmb(std::mt19937_64& rng, std::size_t indices, Eigen::Index dim = 1);

/// |P_y(labeled) - (1 - e^{d_G}(1 - P_y(unlabeled)))| on random discrete instances.
SuiteResult yes_probability_identity_suite(std::size_t instances, std::uint64_t seed);

/// |G_labeled - (G_unlabeled + d_G)| with d_G from the independent mu enumeration.
SuiteResult divergence_decomposition_suite(std::size_t instances, std::uint64_t seed);

/// Violations of 0 <= d_G <= -log pi(empty) on random discrete instances.
SuiteResult divergence_bounds_suite(std::size_t instances, std::uint64_t seed);

/// Closed-form and bisection thresholds for P_y(unlabeled) = 0.999 against ln 500.
SuiteResult yes_probability_threshold_suite();

/// Total variation between the fused GMB (discretized) and the exact GCI of the discretized MB inputs.
SuiteResult fusion_oracle_suite(std::size_t instances, std::uint64_t seed);

/// PHD preservation of the moment match and of the labeled reconstruction; exact cardinality transport.
SuiteResult moment_preservation_suite(std::size_t instances, std::uint64_t seed);

/// Assignment OSPA against permutation enumeration for |X|, |Y| <= 6.
SuiteResult ospa_oracle_suite(std::size_t pairs, std::uint64_t seed);

/// Every suite above at the given instance counts (used by `rfs-fusion validate`).
std::vector<SuiteResult> run_all_suites(std::uint64_t seed, double scale = 1.0);

}  // namespace rfs
