#pragma once

#include <Eigen/Dense>

#include <vector>

namespace rfs
{

struct OspaParams
{
  double cutoff = 100.0;  ///< c, in metres
  double order = 1.0;     ///< p >= 1
};

/// OSPA distance on the position components (first two entries) of the states.
///
/// Uses an exact optimal assignment; two empty sets are at distance 0.
double ospa_distance(std::vector<Eigen::VectorXd> const& X, std::vector<Eigen::VectorXd> const& Y,
                     OspaParams const& params = {});

}  // namespace rfs
