#pragma once

#include "rfs/labeled_rfs.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace rfs
{

/// Injective track correspondence: pairs (i in I1, tau(i) in I2), sorted by i.
using FusionMap = std::vector<std::pair<std::size_t, std::size_t>>;

/// Optional reduction applied to every fused single-object mixture.
struct MixtureReduction
{
  double prune = 1e-5;
  double merge = 4.0;
  std::size_t max_components = 10;
};

struct FusionConfig
{
  std::vector<double> weights;             ///< one per sensor, non-negative, summing to one
  std::size_t max_hypotheses = 1000;       ///< cap on fused hypotheses
  double hypothesis_floor = 1e-6;          ///< normalized weight below which hypotheses are dropped
  double eta_floor = 1e-30;                ///< cross-sensor normalizers below this are treated as zero
  double log_normalizer_floor = -690.7755; ///< log(1e-300): smaller fused normalizers are incompatible
  std::optional<MixtureReduction> reduction;
};

/// Checks weights are non-negative and sum to one; throws std::invalid_argument otherwise.
void validate_weights(std::vector<double> const& weights, std::size_t sensors);

/// First-moment MB approximation of a GMB; indices with zero existence are dropped.
MbDensity gmb_to_mb_moment_match(GmbDensity const& g);

/// All injective maps from I1 into I2 (requires |I1| <= |I2|).
std::vector<FusionMap> enumerate_fusion_maps(std::vector<std::size_t> const& I1, std::vector<std::size_t> const& I2);

/// GCI fusion of two MB densities with the fusion-map expansion.
///
/// The result is a GMB over the index space of m1 whose hypotheses are the pairs
/// (I, tau) with tau an injective map from I into the index space of m2. The best
/// hypotheses are found by ranked assignment over independent clusters of
/// compatible track pairs and renormalized.
GmbDensity gci_fuse_mb_pair(MbDensity const& m1, double w1, MbDensity const& m2, double w2,
                            FusionConfig const& cfg);

/// Moment-matches both GMB inputs to MB form, then fuses them (weights from cfg.weights).
GmbDensity gci_fuse_gmb_pair(GmbDensity const& g1, GmbDensity const& g2, FusionConfig const& cfg);

/// Attaches labels to a fused GMB: index i receives labels[i].
GlmbDensity construct_labeled_fused(GmbDensity const& fused, std::vector<Label> const& labels);

/// Robust labeled fusion: marginalize, fuse pairwise starting at the home sensor, relabel.
GlmbDensity r_gci_glmb_fuse(std::vector<GlmbDensity> const& locals, FusionConfig const& cfg,
                            std::size_t home_sensor);

/// Same pipeline for LMB inputs (their unlabeled marginals are already MB).
GlmbDensity r_gci_lmb_fuse(std::vector<LmbDensity> const& locals, FusionConfig const& cfg, std::size_t home_sensor);

/// Classical label-wise GCI of two LMB densities (weights from cfg.weights).
LmbDensity classical_gci_lmb_fuse(LmbDensity const& l1, LmbDensity const& l2, FusionConfig const& cfg);

/// Classical label-wise GCI folded pairwise over several sensors starting at home.
LmbDensity classical_gci_lmb_fuse(std::vector<LmbDensity> const& locals, FusionConfig const& cfg,
                                  std::size_t home_sensor);

}  // namespace rfs
