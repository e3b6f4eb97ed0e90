#pragma once

#include "rfs/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace rfs
{

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail
{
template <typename Scalar>
constexpr Scalar log_two_pi()
{
  return static_cast<Scalar>(1.8378770664093454835606594728112353L);
}

template <typename Scalar>
Scalar log_sum_exp(std::vector<Scalar> const& values)
{
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  for (Scalar v : values)
    hi = std::max(hi, v);
  if (!std::isfinite(hi))
    return hi;
  Scalar acc = 0;
  for (Scalar v : values)
    acc += std::exp(v - hi);
  return hi + std::log(acc);
}

template <typename Derived>
auto symmetrized(Eigen::MatrixBase<Derived> const& m)
{
  using Matrix = MatrixX<typename Derived::Scalar>;
  Matrix out = (m + m.transpose()) / 2;
  return out;
}
}  // namespace detail

/// Multivariate normal density N(x; mean, covariance).
///
/// The covariance is symmetrized on construction and must be positive definite;
/// its Cholesky factor is cached so repeated evaluation costs O(d^2).
template <typename Scalar>
class Gaussian
{
public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  Gaussian(Vector mean, Matrix const& covariance) : mean_(std::move(mean))
  {
    if (covariance.rows() != covariance.cols() || covariance.rows() != mean_.size() || mean_.size() == 0)
      throw DimensionMismatchError("Gaussian: covariance must be square and match the mean dimension");
    Scalar const scale = std::max(Scalar(1), covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-9) * scale)
      throw std::domain_error("Gaussian: covariance is not symmetric");
    covariance_ = detail::symmetrized(covariance);
    llt_.compute(covariance_);
    if (llt_.info() != Eigen::Success)
      throw SingularMatrixError("Gaussian: covariance is not positive definite");
    Matrix const l = llt_.matrixL();
    log_det_ = 2 * l.diagonal().array().log().sum();
  }

  [[nodiscard]] Vector const& mean() const noexcept { return mean_; }
  [[nodiscard]] Matrix const& covariance() const noexcept { return covariance_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return mean_.size(); }
  [[nodiscard]] Scalar log_det() const noexcept { return log_det_; }

  /// Squared Mahalanobis distance of x from the mean.
  template <typename Derived>
  [[nodiscard]] Scalar mahalanobis2(Eigen::MatrixBase<Derived> const& x) const
  {
    Vector const d = x - mean_;
    return llt_.matrixL().solve(d).squaredNorm();
  }

  template <typename Derived>
  [[nodiscard]] Scalar log_density(Eigen::MatrixBase<Derived> const& x) const
  {
    if (x.size() != mean_.size())
      throw DimensionMismatchError("Gaussian::log_density: dimension mismatch");
    return Scalar(-0.5) * (static_cast<Scalar>(dim()) * detail::log_two_pi<Scalar>() + log_det_ + mahalanobis2(x));
  }

  template <typename Derived>
  [[nodiscard]] Scalar density(Eigen::MatrixBase<Derived> const& x) const
  {
    return std::exp(log_density(x));
  }

  /// Solves covariance * X = rhs.
  template <typename Derived>
  [[nodiscard]] Matrix solve(Eigen::MatrixBase<Derived> const& rhs) const
  {
    return llt_.solve(rhs);
  }

  /// Marginal over the listed state components (exact for a Gaussian).
  [[nodiscard]] Gaussian marginal(std::vector<Eigen::Index> const& components) const
  {
    auto const n = static_cast<Eigen::Index>(components.size());
    Vector m(n);
    Matrix p(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
    {
      m(i) = mean_(components[i]);
      for (Eigen::Index j = 0; j < n; ++j)
        p(i, j) = covariance_(components[i], components[j]);
    }
    return Gaussian(std::move(m), p);
  }

private:
  Vector mean_;
  Matrix covariance_;
  Eigen::LLT<Matrix> llt_;
  Scalar log_det_ = 0;
};

template <typename Scalar>
struct WeightedGaussian
{
  Scalar weight;
  Gaussian<Scalar> gaussian;
};

/// Weighted sum of Gaussians. Weights need not be normalized unless stated.
template <typename Scalar>
class GaussianMixture
{
public:
  using Component = WeightedGaussian<Scalar>;
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  GaussianMixture() = default;
  explicit GaussianMixture(std::vector<Component> components) : components_(std::move(components)) {}
  explicit GaussianMixture(Gaussian<Scalar> g) { components_.push_back({Scalar(1), std::move(g)}); }

  [[nodiscard]] std::vector<Component> const& components() const noexcept { return components_; }
  [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }
  [[nodiscard]] bool empty() const noexcept { return components_.empty(); }
  [[nodiscard]] Component const& operator[](std::size_t i) const { return components_[i]; }
  [[nodiscard]] auto begin() const noexcept { return components_.begin(); }
  [[nodiscard]] auto end() const noexcept { return components_.end(); }

  void add(Scalar weight, Gaussian<Scalar> g) { components_.push_back({weight, std::move(g)}); }

  [[nodiscard]] Eigen::Index dim() const { return components_.empty() ? 0 : components_.front().gaussian.dim(); }

  [[nodiscard]] Scalar total_weight() const
  {
    Scalar s = 0;
    for (auto const& c : components_)
      s += c.weight;
    return s;
  }

  template <typename Derived>
  [[nodiscard]] Scalar density(Eigen::MatrixBase<Derived> const& x) const
  {
    Scalar s = 0;
    for (auto const& c : components_)
      if (c.weight > 0)
        s += c.weight * c.gaussian.density(x);
    return s;
  }

  /// Mean of the normalized mixture.
  [[nodiscard]] Vector mean() const
  {
    Vector m = Vector::Zero(dim());
    for (auto const& c : components_)
      m += c.weight * c.gaussian.mean();
    return m / total_weight();
  }

  /// Covariance of the normalized mixture (spread of means included).
  [[nodiscard]] Matrix covariance() const
  {
    Vector const mu = mean();
    Matrix p = Matrix::Zero(dim(), dim());
    for (auto const& c : components_)
    {
      Vector const d = c.gaussian.mean() - mu;
      p += c.weight * (c.gaussian.covariance() + d * d.transpose());
    }
    return p / total_weight();
  }

  /// Component with the largest weight; mixture must be non-empty.
  [[nodiscard]] Component const& dominant() const
  {
    return *std::max_element(components_.begin(), components_.end(),
                             [](Component const& a, Component const& b) { return a.weight < b.weight; });
  }

  [[nodiscard]] GaussianMixture marginal(std::vector<Eigen::Index> const& dims) const
  {
    GaussianMixture out;
    for (auto const& c : components_)
      out.add(c.weight, c.gaussian.marginal(dims));
    return out;
  }

private:
  std::vector<Component> components_;
};

using Gaussiand = Gaussian<double>;
using GaussianMixtured = GaussianMixture<double>;

/// Rescales weights to sum to one, preserving component order.
template <typename Scalar>
GaussianMixture<Scalar> normalized(GaussianMixture<Scalar> const& gm)
{
  Scalar const total = gm.total_weight();
  if (gm.empty() || !(total > 0))
    throw DegenerateMixtureError("normalized: mixture has no positive weight");
  std::vector<WeightedGaussian<Scalar>> out;
  out.reserve(gm.size());
  for (auto const& c : gm)
    out.push_back({c.weight / total, c.gaussian});
  return GaussianMixture<Scalar>(std::move(out));
}

template <typename Scalar>
struct PowerResult
{
  Gaussian<Scalar> gaussian;
  Scalar log_scale;
  [[nodiscard]] Scalar scale() const { return std::exp(log_scale); }
};

/// N(x; m, P)^w = scale * N(x; m, P / w), exactly.
template <typename Scalar>
PowerResult<Scalar> fractional_power(Gaussian<Scalar> const& g, Scalar omega)
{
  if (!(omega > 0) || omega > 1)
    throw std::domain_error("fractional_power: exponent must lie in (0, 1]");
  if (omega == 1)
    return {g, Scalar(0)};
  auto const d = static_cast<Scalar>(g.dim());
  Scalar const log_scale = Scalar(0.5) * (1 - omega) * (d * detail::log_two_pi<Scalar>() + g.log_det()) -
                           Scalar(0.5) * d * std::log(omega);
  return {Gaussian<Scalar>(g.mean(), g.covariance() / omega), log_scale};
}

/// Component-wise fractional power of a mixture: [sum w_i N_i]^w ~= sum w_i^w N_i^w.
///
/// Exact for a single component; accurate when components are well separated.
template <typename Scalar>
GaussianMixture<Scalar> fractional_power(GaussianMixture<Scalar> const& gm, Scalar omega)
{
  if (!(omega > 0) || omega > 1)
    throw std::domain_error("fractional_power: exponent must lie in (0, 1]");
  if (omega == 1)
    return gm;
  GaussianMixture<Scalar> out;
  for (auto const& c : gm)
  {
    if (!(c.weight > 0))
      continue;
    auto p = fractional_power(c.gaussian, omega);
    out.add(std::exp(omega * std::log(c.weight) + p.log_scale), std::move(p.gaussian));
  }
  return out;
}

template <typename Scalar>
struct ProductResult
{
  Gaussian<Scalar> gaussian;
  Scalar log_scale;
};

/// N(x; a, A) N(x; b, B) = N(a; b, A + B) N(x; c, C).
template <typename Scalar>
ProductResult<Scalar> gaussian_product(Gaussian<Scalar> const& a, Gaussian<Scalar> const& b)
{
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;
  if (a.dim() != b.dim())
    throw DimensionMismatchError("gaussian_product: dimension mismatch");
  Gaussian<Scalar> const sum(b.mean(), a.covariance() + b.covariance());
  Scalar const log_scale = sum.log_density(a.mean());
  Matrix const gain = sum.solve(a.covariance()).transpose();  // A (A+B)^{-1}
  Vector mean = a.mean() + gain * (b.mean() - a.mean());
  Matrix cov = a.covariance() - gain * a.covariance();
  return {Gaussian<Scalar>(std::move(mean), detail::symmetrized(cov)), log_scale};
}

template <typename Scalar>
struct GciFusionResult
{
  GaussianMixture<Scalar> mixture;  ///< normalized; empty when no component pair has mass
  Scalar log_eta;                   ///< log of the normalizing integral

  [[nodiscard]] Scalar eta() const { return std::exp(log_eta); }
  /// True when the normalizer falls below the representable floor.
  [[nodiscard]] bool incompatible() const { return !(log_eta >= std::log(Scalar(1e-300))); }
};

/// Normalized geometric mean p1^w1 p2^w2 / eta of two Gaussian mixtures.
///
/// Weights are carried in the log domain so eta stays meaningful far below the
/// double underflow limit; the returned mixture is always normalized when any
/// component pair has positive weight.
template <typename Scalar>
GciFusionResult<Scalar> gci_fuse(GaussianMixture<Scalar> const& p1, Scalar w1, GaussianMixture<Scalar> const& p2,
                                 Scalar w2)
{
  if (!(w1 > 0) || !(w2 > 0) || std::abs(w1 + w2 - 1) > Scalar(1e-12))
    throw std::domain_error("gci_fuse: weights must be positive and sum to one");

  struct Powered
  {
    Scalar log_weight;
    Gaussian<Scalar> gaussian;
  };
  auto power_all = [](GaussianMixture<Scalar> const& gm, Scalar w) {
    std::vector<Powered> out;
    for (auto const& c : gm)
    {
      if (!(c.weight > 0))
        continue;
      auto p = fractional_power(c.gaussian, w);
      out.push_back({w * std::log(c.weight) + p.log_scale, std::move(p.gaussian)});
    }
    return out;
  };
  auto const a = power_all(p1, w1);
  auto const b = power_all(p2, w2);

  std::vector<Scalar> log_weights;
  std::vector<Gaussian<Scalar>> gaussians;
  log_weights.reserve(a.size() * b.size());
  gaussians.reserve(a.size() * b.size());
  for (auto const& ai : a)
    for (auto const& bj : b)
    {
      auto prod = gaussian_product(ai.gaussian, bj.gaussian);
      log_weights.push_back(ai.log_weight + bj.log_weight + prod.log_scale);
      gaussians.push_back(std::move(prod.gaussian));
    }

  Scalar const log_eta = detail::log_sum_exp(log_weights);
  GaussianMixture<Scalar> fused;
  if (std::isfinite(log_eta))
    for (std::size_t k = 0; k < gaussians.size(); ++k)
      fused.add(std::exp(log_weights[k] - log_eta), std::move(gaussians[k]));
  return {std::move(fused), log_eta};
}

template <typename Scalar, typename DerivedF, typename DerivedQ>
Gaussian<Scalar> kalman_predict(Gaussian<Scalar> const& g, Eigen::MatrixBase<DerivedF> const& F,
                                Eigen::MatrixBase<DerivedQ> const& Q)
{
  if (F.rows() != g.dim() || F.cols() != g.dim() || Q.rows() != g.dim() || Q.cols() != g.dim())
    throw DimensionMismatchError("kalman_predict: F and Q must be square with the state dimension");
  MatrixX<Scalar> const p = F * g.covariance() * F.transpose() + Q;
  return Gaussian<Scalar>(F * g.mean(), detail::symmetrized(p));
}

template <typename Scalar>
struct KalmanUpdateResult
{
  Gaussian<Scalar> gaussian;
  Scalar log_likelihood;  ///< log N(z; H m, H P H' + R)
  [[nodiscard]] Scalar likelihood() const { return std::exp(log_likelihood); }
};

template <typename Scalar, typename DerivedZ, typename DerivedH, typename DerivedR>
KalmanUpdateResult<Scalar> kalman_update(Gaussian<Scalar> const& g, Eigen::MatrixBase<DerivedZ> const& z,
                                         Eigen::MatrixBase<DerivedH> const& H, Eigen::MatrixBase<DerivedR> const& R)
{
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;
  if (H.cols() != g.dim() || H.rows() != z.size() || R.rows() != z.size() || R.cols() != z.size())
    throw DimensionMismatchError("kalman_update: H, R and z dimensions disagree");
  Matrix const s = H * g.covariance() * H.transpose() + R;
  Eigen::LLT<Matrix> llt(detail::symmetrized(s));
  if (llt.info() != Eigen::Success)
    throw SingularMatrixError("kalman_update: innovation covariance is singular");
  Matrix const pht = g.covariance() * H.transpose();
  Matrix const gain = llt.solve(pht.transpose()).transpose();
  Vector const innovation = z - H * g.mean();
  Vector mean = g.mean() + gain * innovation;
  Matrix const cov = g.covariance() - gain * s * gain.transpose();

  Matrix const l = llt.matrixL();
  Scalar const log_det_s = 2 * l.diagonal().array().log().sum();
  Scalar const maha = llt.matrixL().solve(innovation).squaredNorm();
  Scalar const log_lik =
      Scalar(-0.5) * (static_cast<Scalar>(z.size()) * detail::log_two_pi<Scalar>() + log_det_s + maha);
  return {Gaussian<Scalar>(std::move(mean), detail::symmetrized(cov)), log_lik};
}

/// Gaussian-mixture reduction: prune, merge by Mahalanobis neighbourhood, cap, renormalize.
///
/// Components with weight < prune_threshold are dropped; if that removes all of
/// them the single largest-weight component is kept. Merging repeatedly takes
/// the heaviest remaining component j and merges every i with
/// (m_i - m_j)' P_i^{-1} (m_i - m_j) <= merge_threshold, preserving the first two
/// moments of the merged set.
template <typename Scalar>
GaussianMixture<Scalar> prune_and_merge(GaussianMixture<Scalar> const& gm, Scalar prune_threshold,
                                        Scalar merge_threshold, std::size_t max_components)
{
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;
  if (prune_threshold < 0 || merge_threshold < 0 || max_components < 1)
    throw std::invalid_argument("prune_and_merge: invalid thresholds");
  if (gm.empty())
    throw DegenerateMixtureError("prune_and_merge: empty mixture");

  std::vector<std::size_t> alive;
  for (std::size_t i = 0; i < gm.size(); ++i)
    if (gm[i].weight >= prune_threshold && gm[i].weight > 0)
      alive.push_back(i);
  if (alive.empty())
  {
    auto const it = std::max_element(gm.begin(), gm.end(), [](auto const& a, auto const& b) { return a.weight < b.weight; });
    alive.push_back(static_cast<std::size_t>(std::distance(gm.begin(), it)));
  }

  std::vector<WeightedGaussian<Scalar>> merged;
  while (!alive.empty())
  {
    auto const top = std::max_element(alive.begin(), alive.end(),
                                      [&](std::size_t a, std::size_t b) { return gm[a].weight < gm[b].weight; });
    std::size_t const j = *top;
    std::vector<std::size_t> group;
    std::vector<std::size_t> rest;
    for (std::size_t i : alive)
    {
      if (i == j || gm[i].gaussian.mahalanobis2(gm[j].gaussian.mean()) <= merge_threshold)
        group.push_back(i);
      else
        rest.push_back(i);
    }
    if (group.size() == 1)
    {
      merged.push_back(gm[j]);
    }
    else
    {
      Scalar w = 0;
      Vector m = Vector::Zero(gm.dim());
      for (std::size_t i : group)
      {
        w += gm[i].weight;
        m += gm[i].weight * gm[i].gaussian.mean();
      }
      m /= w;
      Matrix p = Matrix::Zero(gm.dim(), gm.dim());
      for (std::size_t i : group)
      {
        Vector const d = gm[i].gaussian.mean() - m;
        p += gm[i].weight * (gm[i].gaussian.covariance() + d * d.transpose());
      }
      merged.push_back({w, Gaussian<Scalar>(std::move(m), detail::symmetrized(Matrix(p / w)))});
    }
    alive = std::move(rest);
  }

  std::stable_sort(merged.begin(), merged.end(), [](auto const& a, auto const& b) { return a.weight > b.weight; });
  if (merged.size() > max_components)
    merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(max_components), merged.end());
  return normalized(GaussianMixture<Scalar>(std::move(merged)));
}

}  // namespace rfs
