#pragma once

#include "rfs/labeled_rfs.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rfs
{

/// Finite substrate on which multi-object densities are evaluated exactly.
///
/// Single-object states live on cells (centre + measure); labeled densities
/// additionally carry a label from `labels`. When `projection` is non-empty the
/// cells are coordinates of those state components and Gaussian densities are
/// marginalized onto them before evaluation.
struct DiscreteSpace
{
  std::vector<Eigen::VectorXd> cells;
  std::vector<double> measures;
  std::vector<Label> labels;
  std::size_t max_cardinality = 0;
  std::vector<Eigen::Index> projection;

  [[nodiscard]] std::size_t cell_count() const noexcept { return cells.size(); }
  /// Index of a label in `labels`; throws std::out_of_range when absent.
  [[nodiscard]] std::size_t label_position(Label const& l) const;

  /// Regular grid with `counts[d]` cells per axis over [lo, hi] (cell centres, equal measures).
  static DiscreteSpace grid(Eigen::VectorXd const& lo, Eigen::VectorXd const& hi, std::vector<std::size_t> const& counts,
                            std::size_t max_cardinality, std::vector<Label> labels = {},
                            std::vector<Eigen::Index> projection = {});
};

using SpacePtr = std::shared_ptr<DiscreteSpace const>;

/// Multi-object density tabulated on ordered tuples of space elements.
///
/// An element is a cell (unlabeled) or a (cell, label) pair (labeled, index
/// cell * |labels| + label). values[n] has element_count()^n entries: the
/// density value at the set formed by the tuple, so it is symmetric under
/// permutation. Labeled tables are zero on tuples that repeat a label.
struct DiscreteMultiObjectDensity
{
  SpacePtr space;
  bool labeled = false;
  std::vector<std::vector<double>> values;
  double raw_mass = 1.0;  ///< set integral before any renormalization (1 when built exactly)

  [[nodiscard]] std::size_t element_count() const;
  [[nodiscard]] std::size_t cardinality_limit() const { return values.empty() ? 0 : values.size() - 1; }
  [[nodiscard]] double empty_set_value() const { return values.empty() ? 0.0 : values[0][0]; }
  /// Cell of an element, and label position of a labeled element.
  [[nodiscard]] std::size_t cell_of(std::size_t element) const;
  [[nodiscard]] std::size_t label_of(std::size_t element) const;
};

/// Hypothesis of a discrete (G)LMB: label (or index) positions, weight, and per-member cell densities.
struct DiscreteHypothesis
{
  std::vector<std::size_t> members;
  double weight = 0.0;
  std::map<std::size_t, Eigen::VectorXd> densities;  ///< member -> density values per cell
};

/// Exact labeled GLMB table on the space (members are label positions).
DiscreteMultiObjectDensity discrete_glmb(SpacePtr space, std::vector<DiscreteHypothesis> const& hypotheses);

/// Exact unlabeled GMB table on the space (members are opaque indices); sums over member orderings.
DiscreteMultiObjectDensity discrete_gmb(SpacePtr space, std::vector<DiscreteHypothesis> const& hypotheses);

/// Sum over n of (1/n!) * sum over tuples of value * product of cell measures.
double set_integral(DiscreteMultiObjectDensity const& d);

struct DiscretizeOptions
{
  double coverage_tolerance = 1e-6;  ///< each single-object density must keep >= 1 - tol of its mass
  bool renormalize = true;           ///< rescale to unit set integral (raw value kept in raw_mass)
};

/// Evaluates a labeled density on cell centres (labels must belong to the space).
DiscreteMultiObjectDensity discretize(LmbDensity const& d, SpacePtr space, DiscretizeOptions const& opt = {});
DiscreteMultiObjectDensity discretize(GlmbDensity const& d, SpacePtr space, DiscretizeOptions const& opt = {});
/// Evaluates an unlabeled density on cell centres.
DiscreteMultiObjectDensity discretize(MbDensity const& d, SpacePtr space, DiscretizeOptions const& opt = {});
DiscreteMultiObjectDensity discretize(GmbDensity const& d, SpacePtr space, DiscretizeOptions const& opt = {});

/// Unlabeled marginal of a labeled table: sum over all label tuples.
DiscreteMultiObjectDensity marginalize(DiscreteMultiObjectDensity const& labeled);

using WeightedDensities = std::vector<std::pair<DiscreteMultiObjectDensity, double>>;

/// Normalized weighted geometric mean (exact GCI). Throws IncompatiblePosteriorsError when the normalizer is 0.
DiscreteMultiObjectDensity gci_fuse_discrete(WeightedDensities const& ds);

/// GCI divergence -log c; an explicit flag marks the c = 0 case.
struct Divergence
{
  double value = 0.0;  ///< finite when !infinite
  bool infinite = false;
};

/// GCI coefficient c = set integral of the weighted geometric mean (requires positive weights summing to 1).
double gci_coefficient(WeightedDensities const& ds);
Divergence gci_divergence(WeightedDensities const& ds);

/// Total-variation distance 0.5 * set integral of |a - b| (same space and kind).
double total_variation(DiscreteMultiObjectDensity const& a, DiscreteMultiObjectDensity const& b);

/// Conditional label distribution given states: labeled density over its unlabeled marginal.
class ConditionalMultilabel
{
public:
  explicit ConditionalMultilabel(DiscreteMultiObjectDensity labeled);

  /// Probability of labels (positions) given cells; throws UndefinedConditionalError where the marginal is 0.
  [[nodiscard]] double operator()(std::vector<std::size_t> const& cells, std::vector<std::size_t> const& labels) const;
  /// Sum of the conditional over every label tuple (1 wherever defined).
  [[nodiscard]] double total(std::vector<std::size_t> const& cells) const;

private:
  DiscreteMultiObjectDensity labeled_;
  DiscreteMultiObjectDensity unlabeled_;
};

/// Integral of the labeled density over states for a fixed label set (positions).
double joint_existence_probability(DiscreteMultiObjectDensity const& labeled, std::vector<std::size_t> const& labels);

struct DiagnosticsReport
{
  double G_labeled = 0.0;
  double G_unlabeled = 0.0;
  double d_G = 0.0;
  double d_G_upper = 0.0;
  double p_yes_labeled = 0.0;
  double p_yes_unlabeled = 0.0;
  double identity_residual = 0.0;  ///< |G_labeled - (G_unlabeled + d_G)| when all terms are finite
  bool G_labeled_infinite = false;
  bool G_unlabeled_infinite = false;
  bool d_G_infinite = false;
  bool d_G_upper_infinite = false;

  [[nodiscard]] static std::string csv_header();
  [[nodiscard]] std::string csv_row(long time) const;
};

/// Label inconsistency analysis of labeled densities on a shared labeled space.
///
/// G of the labeled set and of the unlabeled marginals are computed directly;
/// d_G is computed independently as -log E[mu] under the unlabeled fused
/// density, where mu is the GCI coefficient of the conditional label
/// distributions. The residual of G_labeled = G_unlabeled + d_G is reported.
DiagnosticsReport label_inconsistency_indicator(WeightedDensities const& labeled);

/// |P_y(labeled) - (1 - exp(d_G) (1 - P_y(unlabeled)))|.
double corollary2_check(DiagnosticsReport const& report);

/// Labeled yes-object probability implied by d_G and the unlabeled yes-object probability.
double labeled_yes_probability(double d_G, double p_yes_unlabeled);

/// d_G at which the labeled yes-object probability drops to `target` (closed form).
double yes_probability_threshold(double p_yes_unlabeled, double target = 0.5);

/// The same threshold found by bisection on labeled_yes_probability (independent check).
double yes_probability_threshold_bisection(double p_yes_unlabeled, double target = 0.5, double tol = 1e-12);

/// Grid over the projected state components covering every density to +-span sigmas.
DiscreteSpace covering_grid(std::vector<GaussianMixtured> const& densities, std::vector<Eigen::Index> const& projection,
                            double span_sigmas, std::size_t cells_per_axis, std::size_t max_cardinality,
                            std::vector<Label> labels);

/// Discretizes labeled posteriors on one covering grid of the projected state components and analyses them.
///
/// Labels are the union of the label spaces; the cardinality limit is the largest
/// hypothesis with positive weight. The grid spans `span_sigmas` around every density.
DiagnosticsReport diagnose_labeled(std::vector<GlmbDensity> const& densities, std::vector<double> const& weights,
                                   std::vector<Eigen::Index> const& projection, std::size_t cells_per_axis = 40,
                                   double span_sigmas = 6.0, DiscretizeOptions const& opt = {});

}  // namespace rfs
