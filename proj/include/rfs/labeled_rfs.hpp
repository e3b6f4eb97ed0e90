#pragma once

#include "rfs/gaussian.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rfs
{

/// Track label: (time of birth, index within that birth step), ordered lexicographically.
struct Label
{
  std::uint32_t birth_time = 0;
  std::uint32_t index = 0;

  auto operator<=>(Label const&) const = default;
};

std::string to_string(Label const& l);

/// Single-object densities are shared between hypotheses, never mutated.
using DensityPtr = std::shared_ptr<GaussianMixtured const>;

DensityPtr make_density(GaussianMixtured gm);

/// Normalized mixture sum_k w_k p_k / sum_k w_k; repeated pointers are pooled first.
GaussianMixtured blend(std::vector<std::pair<double, DensityPtr>> const& terms);

struct BernoulliComponent
{
  Label label;
  double r = 0.0;
  GaussianMixtured p;
};

/// Labeled multi-Bernoulli density; components kept sorted by label, labels distinct.
struct LmbDensity
{
  std::vector<BernoulliComponent> components;

  [[nodiscard]] BernoulliComponent const* find(Label const& l) const;
};

/// Unlabeled Bernoulli term carrying an opaque index.
struct MbComponent
{
  std::size_t index = 0;
  double r = 0.0;
  GaussianMixtured p;
};

/// Multi-Bernoulli density; components sorted by index, indices distinct.
struct MbDensity
{
  std::vector<MbComponent> components;
};

struct GlmbHypothesis
{
  std::vector<Label> labels;  ///< sorted, distinct
  std::size_t component = 0;  ///< the discrete index c
  double weight = 0.0;        ///< w^(c)(I), normalized over all hypotheses
};

/// Generalized labeled multi-Bernoulli density.
///
/// Weights are stored normalized in linear scale; products of many factors are
/// formed in the log domain by the operations that build them.
struct GlmbDensity
{
  std::vector<Label> label_space;  ///< sorted, distinct
  std::vector<GlmbHypothesis> hypotheses;
  std::map<std::size_t, std::map<Label, DensityPtr>> components;  ///< c -> label -> p^(c)(., label)
};

struct GmbHypothesis
{
  std::vector<std::size_t> indices;  ///< sorted, distinct
  std::size_t tag = 0;               ///< selects the density set
  double weight = 0.0;
};

/// Generalized multi-Bernoulli density: unlabeled marginal of a GLMB.
struct GmbDensity
{
  std::vector<std::size_t> index_space;  ///< sorted, distinct
  std::vector<GmbHypothesis> hypotheses;
  std::map<std::size_t, std::map<std::size_t, DensityPtr>> density_sets;  ///< tag -> index -> density
};

/// Sorts by label and rejects duplicates.
LmbDensity make_lmb(std::vector<BernoulliComponent> components);

/// Throws SchemaError when structural invariants fail (weights, labels, densities).
void validate(LmbDensity const& d);
void validate(MbDensity const& d);
void validate(GlmbDensity const& d);
void validate(GmbDensity const& d);

/// Unlabeled marginal of a GLMB: index i stands for label_space[i].
GmbDensity glmb_to_gmb(GlmbDensity const& g);

/// Unlabeled marginal of an LMB: index i stands for the i-th component's label.
MbDensity lmb_to_mb(LmbDensity const& l);

/// An MB viewed as a GMB with one density set (tag 0) and all 2^n subsets.
GmbDensity mb_to_gmb(MbDensity const& m, std::size_t max_components = 20);

/// First-moment LMB approximation of a GLMB; labels with r < 1e-12 are dropped.
LmbDensity glmb_to_lmb(GlmbDensity const& g);

/// Exact GLMB form of an LMB (all subsets enumerated; only for small densities).
GlmbDensity lmb_to_glmb(LmbDensity const& l, std::size_t max_components = 20);

/// Drops hypotheses with weight below the threshold and renormalizes the rest.
GlmbDensity glmb_prune(GlmbDensity const& g, double threshold);

std::vector<double> cardinality_distribution(LmbDensity const& d);
std::vector<double> cardinality_distribution(MbDensity const& d);
std::vector<double> cardinality_distribution(GlmbDensity const& d);
std::vector<double> cardinality_distribution(GmbDensity const& d);

/// Probability hypothesis density as an (unnormalized) Gaussian mixture.
GaussianMixtured phd(LmbDensity const& d);
GaussianMixtured phd(MbDensity const& d);
GaussianMixtured phd(GlmbDensity const& d);
GaussianMixtured phd(GmbDensity const& d);

/// Probability that the set is empty.
double no_object_probability(LmbDensity const& d);
double no_object_probability(MbDensity const& d);
double no_object_probability(GlmbDensity const& d);
double no_object_probability(GmbDensity const& d);

}  // namespace rfs
