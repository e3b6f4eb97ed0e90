#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace rfs
{

/// Cost value marking an entry that may not be used by any assignment.
inline constexpr double kForbiddenCost = std::numeric_limits<double>::infinity();

/// Assignment of every row to a distinct column.
struct Assignment
{
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost assignment of all rows of a rows <= cols cost matrix.
///
/// Entries equal to kForbiddenCost are never used; returns nullopt when no
/// finite-cost assignment exists. Exact (shortest augmenting path Hungarian).
std::optional<Assignment> solve_assignment(Eigen::MatrixXd const& cost);

/// The k cheapest assignments in non-decreasing cost order (Murty's partitioning).
///
/// Enumeration stops early once a solution exceeds best cost + max_cost_gap.
std::vector<Assignment> k_best_assignments(Eigen::MatrixXd const& cost, std::size_t k,
                                           double max_cost_gap = std::numeric_limits<double>::infinity());

}  // namespace rfs
