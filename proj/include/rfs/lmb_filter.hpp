#pragma once

#include "rfs/labeled_rfs.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rfs
{

struct MotionModel
{
  Eigen::MatrixXd F;
  Eigen::MatrixXd Q;
  double p_survival = 1.0;

  /// Planar nearly-constant-velocity model on the state (x, y, vx, vy).
  static MotionModel constant_velocity(double dt, double sigma_v, double p_survival);
};

struct SensorModel
{
  Eigen::MatrixXd H;
  Eigen::MatrixXd R;
  double p_detect = 1.0;
  double clutter_rate = 0.0;     ///< expected clutter reports per scan
  double clutter_density = 0.0;  ///< uniform clutter intensity kappa (rate / area)

  /// Position-only sensor on the state (x, y, vx, vy) with R = sigma^2 I.
  static SensorModel position_sensor(double sigma, double p_detect, double clutter_rate, double region_area);
};

struct PriorBirthTerm
{
  double r = 0.0;
  GaussianMixtured p;
  std::vector<std::uint32_t> steps;  ///< steps at which the term is active; empty means every step
};

struct BirthModel
{
  enum class Kind
  {
    prior,
    adaptive
  };

  Kind kind = Kind::prior;
  std::vector<PriorBirthTerm> prior;  ///< prior variant: births at active steps, labels (k, term position + 1)
  double expected_births = 0.0;       ///< adaptive variant: lambda_B
  double r_max = 1.0;                 ///< adaptive variant: cap on a birth's existence probability
  Eigen::MatrixXd covariance;         ///< adaptive variant: birth covariance P_B
};

struct UpdateOptions
{
  double gate = 16.0;                   ///< squared-Mahalanobis innovation gate
  std::size_t max_hypotheses = 200;     ///< ranked association hypotheses kept per cluster
  double hypothesis_floor = 1e-7;       ///< relative weight below which ranking stops
  double gm_prune = 1e-5;               ///< Gaussian component pruning threshold
  double gm_merge = 4.0;                ///< Gaussian component merging threshold
  std::size_t gm_max_components = 10;   ///< Gaussian component cap per track
};

struct LmbUpdateResult
{
  LmbDensity posterior;
  std::vector<double> assoc_prob;  ///< r_U(z) for each measurement, in input order
};

struct Estimate
{
  Label label;
  Eigen::VectorXd state;
};

/// Survival-thinned, Kalman-predicted posterior with births appended.
LmbDensity lmb_predict(LmbDensity const& posterior, MotionModel const& motion,
                       std::vector<BernoulliComponent> const& births);

/// LMB approximation of the exact single-scan GLMB update of an LMB prior.
///
/// Tracks and measurements are grouped into independent clusters by gating;
/// within each cluster the best association hypotheses are ranked with Murty's
/// algorithm, and the posterior Bernoulli parameters are the hypothesis
/// marginals. Each track's mixture is then pruned and merged.
LmbUpdateResult lmb_update(LmbDensity const& predicted, std::vector<Eigen::VectorXd> const& Z,
                           SensorModel const& sensor, UpdateOptions const& options = {});

/// Birth components of the prior variant, labelled (time, 1..n).
std::vector<BernoulliComponent> prior_births(BirthModel const& model, std::uint32_t time);

/// Measurement-driven births for the next step, labelled (next_time, position of z, 1-based).
std::vector<BernoulliComponent> adaptive_birth(std::vector<Eigen::VectorXd> const& Z,
                                               std::vector<double> const& assoc_prob, BirthModel const& model,
                                               std::uint32_t next_time);

/// Removes Bernoulli components with r below the threshold.
LmbDensity lmb_truncate(LmbDensity const& l, double threshold);

/// Labels and states (largest-weight component mean) of components with r strictly above threshold.
std::vector<Estimate> extract_estimates(LmbDensity const& l, double threshold = 0.5);

/// One local tracker: predict, update, truncate, and generate births.
class LmbFilter
{
public:
  LmbFilter(MotionModel motion, SensorModel sensor, BirthModel birth, UpdateOptions options = {},
            double truncation = 1e-4);

  /// Processes the scan of time step k (k >= 1) and returns the posterior.
  LmbDensity const& step(std::uint32_t k, std::vector<Eigen::VectorXd> const& Z);

  [[nodiscard]] LmbDensity const& posterior() const noexcept { return posterior_; }

private:
  MotionModel motion_;
  SensorModel sensor_;
  BirthModel birth_;
  UpdateOptions options_;
  double truncation_;
  LmbDensity posterior_;
  std::vector<BernoulliComponent> pending_births_;
};

}  // namespace rfs
