#include "rfs/ospa.hpp"

#include "rfs/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfs
{

double ospa_distance(std::vector<Eigen::VectorXd> const& X, std::vector<Eigen::VectorXd> const& Y,
                     OspaParams const& params)
{
  if (!(params.cutoff > 0) || !(params.order >= 1))
    throw std::invalid_argument("ospa_distance: need c > 0 and p >= 1");
  // Orient so the smaller set indexes the rows. Equal sizes are ordered
  // lexicographically so that swapping the arguments repeats the same arithmetic.
  auto vec_less = [](Eigen::VectorXd const& a, Eigen::VectorXd const& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  };
  bool const x_rows = X.size() < Y.size() ||
                      (X.size() == Y.size() && !std::lexicographical_compare(Y.begin(), Y.end(), X.begin(), X.end(), vec_less));
  auto const& small = x_rows ? X : Y;
  auto const& large = x_rows ? Y : X;
  auto const m = small.size();
  auto const n = large.size();
  if (n == 0)
    return 0.0;

  double const c = params.cutoff;
  double const p = params.order;
  Eigen::MatrixXd cost(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
    {
      if (small[i].size() < 2 || large[j].size() < 2)
        throw std::invalid_argument("ospa_distance: states need at least two position components");
      double const d = (small[i].head<2>() - large[j].head<2>()).norm();
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::pow(std::min(d, c), p);
    }
  double const matched = m == 0 ? 0.0 : solve_assignment(cost)->cost;
  double const total = matched + std::pow(c, p) * static_cast<double>(n - m);
  return std::pow(total / static_cast<double>(n), 1.0 / p);
}

}  // namespace rfs
