#include "rfs/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfs
{

std::optional<Assignment> solve_assignment(Eigen::MatrixXd const& cost)
{
  auto const n = static_cast<int>(cost.rows());
  auto const m = static_cast<int>(cost.cols());
  if (n > m)
    throw std::invalid_argument("solve_assignment: more rows than columns");
  if (n == 0)
    return Assignment{};

  double const inf = std::numeric_limits<double>::infinity();
  // 1-based potentials and matching; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i)
  {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do
    {
      used[j0] = 1;
      int const i0 = p[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j)
      {
        if (used[j])
          continue;
        double const c = cost(i0 - 1, j - 1);
        if (std::isfinite(c))
        {
          double const cur = c - u[i0] - v[j];
          if (cur < minv[j])
          {
            minv[j] = cur;
            way[j] = j0;
          }
        }
        if (minv[j] < delta)
        {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 < 0 || !std::isfinite(delta))
        return std::nullopt;
      for (int j = 0; j <= m; ++j)
      {
        if (used[j])
        {
          u[p[j]] += delta;
          v[j] -= delta;
        }
        else
        {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do
    {
      int const j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.row_to_col.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0)
      out.row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  for (int i = 0; i < n; ++i)
    out.cost += cost(i, out.row_to_col[static_cast<std::size_t>(i)]);
  return out;
}

namespace
{

struct MurtyNode
{
  Eigen::MatrixXd cost;  // constrained copy of the original matrix
  Assignment solution;
  int fixed_rows;  // rows 0..fixed_rows-1 are forced to their solution columns
};

struct NodeOrder
{
  bool operator()(MurtyNode const& a, MurtyNode const& b) const { return a.solution.cost > b.solution.cost; }
};

/// Solves the problem with rows 0..fixed-1 pinned to `pinned` columns by solving only the free block.
std::optional<Assignment> solve_pinned(Eigen::MatrixXd const& cost, std::vector<int> const& pinned, int fixed)
{
  auto const n = static_cast<int>(cost.rows());
  auto const m = static_cast<int>(cost.cols());
  std::vector<char> taken(static_cast<std::size_t>(m), 0);
  double fixed_cost = 0.0;
  for (int i = 0; i < fixed; ++i)
  {
    taken[static_cast<std::size_t>(pinned[static_cast<std::size_t>(i)])] = 1;
    fixed_cost += cost(i, pinned[static_cast<std::size_t>(i)]);
  }
  std::vector<int> free_cols;
  for (int j = 0; j < m; ++j)
    if (!taken[static_cast<std::size_t>(j)])
      free_cols.push_back(j);
  Eigen::MatrixXd sub(n - fixed, static_cast<Eigen::Index>(free_cols.size()));
  for (int i = fixed; i < n; ++i)
    for (std::size_t c = 0; c < free_cols.size(); ++c)
      sub(i - fixed, static_cast<Eigen::Index>(c)) = cost(i, free_cols[c]);
  auto sol = solve_assignment(sub);
  if (!sol)
    return std::nullopt;
  Assignment out;
  out.row_to_col.assign(pinned.begin(), pinned.begin() + fixed);
  for (int col : sol->row_to_col)
    out.row_to_col.push_back(free_cols[static_cast<std::size_t>(col)]);
  out.cost = fixed_cost + sol->cost;
  return out;
}

}  // namespace

std::vector<Assignment> k_best_assignments(Eigen::MatrixXd const& cost, std::size_t k, double max_cost_gap)
{
  std::vector<Assignment> out;
  if (k == 0)
    return out;
  auto first = solve_assignment(cost);
  if (!first)
    return out;
  double const limit = first->cost + max_cost_gap;

  std::vector<MurtyNode> heap;
  NodeOrder const order;
  heap.push_back({cost, std::move(*first), 0});
  auto const n = static_cast<int>(cost.rows());

  while (!heap.empty() && out.size() < k)
  {
    std::pop_heap(heap.begin(), heap.end(), order);
    MurtyNode node = std::move(heap.back());
    heap.pop_back();
    out.push_back(node.solution);
    if (out.size() == k)
      break;

    // Partition the remaining solution space of this node; children beyond the gap are never ranked.
    for (int i = node.fixed_rows; i < n; ++i)
    {
      int const col = node.solution.row_to_col[static_cast<std::size_t>(i)];
      double const keep = node.cost(i, col);
      node.cost(i, col) = kForbiddenCost;
      auto sol = solve_pinned(node.cost, node.solution.row_to_col, i);
      if (sol && sol->cost <= limit)
      {
        heap.push_back({node.cost, std::move(*sol), i});
        std::push_heap(heap.begin(), heap.end(), order);
      }
      node.cost(i, col) = keep;
    }
  }
  return out;
}

}  // namespace rfs
