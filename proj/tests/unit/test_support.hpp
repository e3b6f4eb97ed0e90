#pragma once

#include "rfs/labeled_rfs.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>

namespace rfs::test
{

inline Gaussiand gauss1(double mean, double var)
{
  return Gaussiand(Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var));
}

inline Gaussiand gauss4(Eigen::Vector4d const& mean, Eigen::Vector4d const& diag)
{
  return Gaussiand(mean, diag.asDiagonal().toDenseMatrix());
}

inline GaussianMixtured single(Gaussiand g)
{
  return GaussianMixtured(std::move(g));
}

/// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(std::function<double(double)> const& f, double a, double b, int panels = 4000)
{
  double const h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i)
    s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Tensor Simpson rule on a square.
inline double simpson2(std::function<double(double, double)> const& f, double a, double b, int panels = 400)
{
  return simpson([&](double x) { return simpson([&](double y) { return f(x, y); }, a, b, panels); }, a, b, panels);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n, double lo = 0.5, double hi = 3.0)
{
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = uniform(rng, -1.0, 1.0);
  Eigen::MatrixXd const q = a.householderQr().householderQ();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i)
    d(i) = uniform(rng, lo, hi);
  return q * d.asDiagonal() * q.transpose();
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi)
{
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = uniform(rng, lo, hi);
  return v;
}

inline BernoulliComponent bernoulli(std::uint32_t birth, std::uint32_t index, double r, GaussianMixtured p)
{
  return BernoulliComponent{Label{birth, index}, r, std::move(p)};
}

}  // namespace rfs::test
