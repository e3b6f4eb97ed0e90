#include "rfs/fusion.hpp"

#include "rfs/assignment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace rfs
{

namespace
{

constexpr double kLogTiny = -690.7755278982137;  // log(1e-300)

double safe_log(double x)
{
  return x > 0 ? std::log(x) : -std::numeric_limits<double>::infinity();
}

/// log(1 - x) floored at log(1e-300) so certain existence stays finite.
double log1m(double x)
{
  return x < 1 ? std::max(std::log1p(-x), kLogTiny) : kLogTiny;
}

/// One ranked choice within a cluster: value = sum of log factors, columns per row.
struct ClusterChoice
{
  double value;
  std::vector<int> row_to_col;
};

struct Combined
{
  double value;
  std::vector<std::size_t> picks;  // one choice index per cluster
};

/// Top-k sums of two descending lists (lazy frontier expansion).
std::vector<Combined> merge_top(std::vector<Combined> const& a, std::vector<ClusterChoice> const& b, std::size_t k,
                                double gap)
{
  std::vector<Combined> out;
  if (a.empty() || b.empty())
    return out;
  using Entry = std::tuple<double, std::size_t, std::size_t>;
  std::priority_queue<Entry> heap;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  heap.emplace(a[0].value + b[0].value, 0, 0);
  seen.emplace(0, 0);
  double const best = a[0].value + b[0].value;
  while (!heap.empty() && out.size() < k)
  {
    auto [v, i, j] = heap.top();
    heap.pop();
    if (v < best - gap)
      break;
    Combined c{v, a[i].picks};
    c.picks.push_back(j);
    out.push_back(std::move(c));
    if (i + 1 < a.size() && seen.emplace(i + 1, j).second)
      heap.emplace(a[i + 1].value + b[j].value, i + 1, j);
    if (j + 1 < b.size() && seen.emplace(i, j + 1).second)
      heap.emplace(a[i].value + b[j + 1].value, i, j + 1);
  }
  return out;
}

int find_root(std::vector<int>& parent, int x)
{
  while (parent[x] != x)
  {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

void validate_weights(std::vector<double> const& weights, std::size_t sensors)
{
  if (weights.size() != sensors)
    throw std::invalid_argument(fmt::format("fusion weights: expected {} weights, got {}", sensors, weights.size()));
  double total = 0.0;
  for (double w : weights)
  {
    if (!(w >= 0) || !std::isfinite(w))
      throw std::invalid_argument("fusion weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument(fmt::format("fusion weights must sum to 1 (got {})", total));
}

MbDensity gmb_to_mb_moment_match(GmbDensity const& g)
{
  std::map<std::size_t, double> r;
  std::map<std::size_t, std::vector<std::pair<double, DensityPtr>>> terms;
  for (auto const& h : g.hypotheses)
  {
    if (!(h.weight > 0))
      continue;
    auto const& set = g.density_sets.at(h.tag);
    for (auto i : h.indices)
    {
      r[i] += h.weight;
      terms[i].emplace_back(h.weight, set.at(i));
    }
  }
  MbDensity out;
  for (auto i : g.index_space)
  {
    auto it = r.find(i);
    if (it == r.end() || !(it->second > 0))
      continue;
    out.components.push_back({i, std::min(it->second, 1.0), blend(terms[i])});
  }
  return out;
}

std::vector<FusionMap> enumerate_fusion_maps(std::vector<std::size_t> const& I1, std::vector<std::size_t> const& I2)
{
  if (I1.size() > I2.size())
    throw std::invalid_argument("enumerate_fusion_maps: |I1| > |I2|; swap the operands");
  std::vector<FusionMap> out;
  FusionMap current;
  std::vector<char> used(I2.size(), 0);
  auto recurse = [&](auto&& self, std::size_t depth) -> void {
    if (depth == I1.size())
    {
      out.push_back(current);
      return;
    }
    for (std::size_t j = 0; j < I2.size(); ++j)
    {
      if (used[j])
        continue;
      used[j] = 1;
      current.emplace_back(I1[depth], I2[j]);
      self(self, depth + 1);
      current.pop_back();
      used[j] = 0;
    }
  };
  recurse(recurse, 0);
  return out;
}

GmbDensity gci_fuse_mb_pair(MbDensity const& m1, double w1, MbDensity const& m2, double w2, FusionConfig const& cfg)
{
  if (!(w1 > 0) || !(w2 > 0) || std::abs(w1 + w2 - 1.0) > 1e-9)
    throw std::invalid_argument("gci_fuse_mb_pair: weights must be positive and sum to one");
  auto const n1 = m1.components.size();
  auto const n2 = m2.components.size();
  double const log_eta_floor = std::log(cfg.eta_floor);
  double const gap = -std::log(cfg.hypothesis_floor);

  // Pairwise fused densities and normalizers for compatible track pairs.
  struct Pair
  {
    double log_eta = -std::numeric_limits<double>::infinity();
    DensityPtr density;
  };
  std::vector<std::vector<Pair>> pairs(n1, std::vector<Pair>(n2));
  std::vector<int> parent(n1 + n2);
  std::iota(parent.begin(), parent.end(), 0);
  std::size_t feasible = 0;
  for (std::size_t i = 0; i < n1; ++i)
  {
    if (!(m1.components[i].r > 0))
      continue;
    for (std::size_t j = 0; j < n2; ++j)
    {
      if (!(m2.components[j].r > 0))
        continue;
      auto fused = gci_fuse(m1.components[i].p, w1, m2.components[j].p, w2);
      if (!(fused.log_eta >= log_eta_floor) || fused.mixture.empty())
        continue;
      // A pair whose hypotheses all lose more than the gap against leaving track i unmatched
      // can never appear in a retained hypothesis; dropping it also keeps clusters small.
      double const r1 = m1.components[i].r;
      double const r2 = m2.components[j].r;
      double const advantage = w1 * (safe_log(r1) - log1m(r1)) + w2 * (safe_log(r2) - log1m(r2)) + fused.log_eta;
      if (!(advantage >= -gap))
        continue;
      GaussianMixtured p = std::move(fused.mixture);
      if (cfg.reduction)
        p = prune_and_merge(p, cfg.reduction->prune, cfg.reduction->merge, cfg.reduction->max_components);
      pairs[i][j] = {fused.log_eta, make_density(std::move(p))};
      parent[find_root(parent, static_cast<int>(i))] = find_root(parent, static_cast<int>(n1 + j));
      ++feasible;
    }
  }

  // Every hypothesis shares the factor in which no track is matched; matched rows adjust it.
  double base = 0.0;
  for (auto const& c : m2.components)
    base += w2 * log1m(c.r);

  std::map<int, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> clusters;
  for (std::size_t i = 0; i < n1; ++i)
    clusters[find_root(parent, static_cast<int>(i))].first.push_back(i);
  for (std::size_t j = 0; j < n2; ++j)
  {
    auto it = clusters.find(find_root(parent, static_cast<int>(n1 + j)));
    if (it != clusters.end())
      it->second.second.push_back(j);
  }

  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> cluster_members;
  std::vector<std::vector<ClusterChoice>> cluster_choices;
  for (auto const& [root, members] : clusters)
  {
    auto const& [rows, cols] = members;
    if (cols.empty())
    {
      // Isolated track of sensor 1: it can only be absent from the fused set.
      base += w1 * log1m(m1.components[rows.front()].r);
      continue;
    }
    auto const nr = static_cast<Eigen::Index>(rows.size());
    auto const nc = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(nr, nc + nr, kForbiddenCost);
    for (Eigen::Index a = 0; a < nr; ++a)
    {
      auto const& c1 = m1.components[rows[a]];
      cost(a, nc + a) = -w1 * log1m(c1.r);
      for (Eigen::Index b = 0; b < nc; ++b)
      {
        auto const& pr = pairs[rows[a]][cols[b]];
        if (!pr.density)
          continue;
        double const r2 = m2.components[cols[b]].r;
        double const value = w1 * safe_log(c1.r) + w2 * (safe_log(r2) - log1m(r2)) + pr.log_eta;
        if (std::isfinite(value))
          cost(a, b) = -value;
      }
    }
    auto ranked = k_best_assignments(cost, cfg.max_hypotheses, gap);
    std::vector<ClusterChoice> choices;
    for (auto& h : ranked)
      choices.push_back({-h.cost, std::move(h.row_to_col)});
    cluster_members.push_back(members);
    cluster_choices.push_back(std::move(choices));
  }

  std::vector<Combined> combined{{0.0, {}}};
  for (auto const& choices : cluster_choices)
    combined = merge_top(combined, choices, cfg.max_hypotheses, gap);

  std::vector<double> log_w;
  for (auto const& c : combined)
    log_w.push_back(base + c.value);
  double const log_c = detail::log_sum_exp(log_w);
  if (combined.empty() || !(log_c >= cfg.log_normalizer_floor))
    throw IncompatiblePosteriorsError(
        fmt::format("fused normalizer underflows (log C = {})", log_c),
        IncompatiblePosteriorsError::Payload{log_c, feasible, combined.size()});

  // Normalize, apply the weight floor (the best hypothesis always survives), renormalize.
  std::vector<std::size_t> keep;
  double kept_total = 0.0;
  for (std::size_t h = 0; h < combined.size(); ++h)
  {
    double const w = std::exp(log_w[h] - log_c);
    if (h == 0 || w >= cfg.hypothesis_floor)
    {
      keep.push_back(h);
      kept_total += w;
    }
  }

  GmbDensity out;
  for (auto const& c : m1.components)
    out.index_space.push_back(c.index);
  std::size_t tag = 0;
  for (auto h : keep)
  {
    GmbHypothesis hyp;
    hyp.tag = tag;
    hyp.weight = std::exp(log_w[h] - log_c) / kept_total;
    auto& set = out.density_sets[tag];
    for (std::size_t k = 0; k < cluster_members.size(); ++k)
    {
      auto const& [rows, cols] = cluster_members[k];
      auto const& choice = cluster_choices[k][combined[h].picks[k]];
      for (std::size_t a = 0; a < rows.size(); ++a)
      {
        auto const col = static_cast<std::size_t>(choice.row_to_col[a]);
        if (col >= cols.size())
          continue;
        auto const index = m1.components[rows[a]].index;
        hyp.indices.push_back(index);
        set[index] = pairs[rows[a]][cols[col]].density;
      }
    }
    std::sort(hyp.indices.begin(), hyp.indices.end());
    out.hypotheses.push_back(std::move(hyp));
    ++tag;
  }
  return out;
}

GmbDensity gci_fuse_gmb_pair(GmbDensity const& g1, GmbDensity const& g2, FusionConfig const& cfg)
{
  validate_weights(cfg.weights, 2);
  return gci_fuse_mb_pair(gmb_to_mb_moment_match(g1), cfg.weights[0], gmb_to_mb_moment_match(g2), cfg.weights[1],
                          cfg);
}

GlmbDensity construct_labeled_fused(GmbDensity const& fused, std::vector<Label> const& labels)
{
  auto label_of = [&](std::size_t i) {
    if (i >= labels.size())
      throw std::invalid_argument("construct_labeled_fused: index without a label");
    return labels[i];
  };
  GlmbDensity out;
  for (auto i : fused.index_space)
    out.label_space.push_back(label_of(i));
  std::sort(out.label_space.begin(), out.label_space.end());
  if (std::adjacent_find(out.label_space.begin(), out.label_space.end()) != out.label_space.end())
    throw LabelCollisionError("construct_labeled_fused: two indices share a label");
  if (fused.hypotheses.empty())
  {
    out.hypotheses.push_back({{}, 0, 1.0});
    out.components[0];
    return out;
  }
  for (auto const& h : fused.hypotheses)
  {
    GlmbHypothesis gh;
    gh.component = h.tag;
    gh.weight = h.weight;
    for (auto i : h.indices)
      gh.labels.push_back(label_of(i));
    std::sort(gh.labels.begin(), gh.labels.end());
    out.hypotheses.push_back(std::move(gh));
  }
  for (auto const& [tag, set] : fused.density_sets)
  {
    auto& comp = out.components[tag];
    for (auto const& [i, p] : set)
      comp[label_of(i)] = p;
  }
  return out;
}

namespace
{

/// Pairwise fold of MB marginals starting at the home sensor; returns the final fused GMB.
GmbDensity fold_pairwise(std::vector<MbDensity> const& mbs, FusionConfig const& cfg, std::size_t home)
{
  validate_weights(cfg.weights, mbs.size());
  if (home >= mbs.size())
    throw std::invalid_argument("fusion: home sensor out of range");
  if (!(cfg.weights[home] > 0))
    throw std::invalid_argument("fusion: the home sensor must have a positive weight");
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < mbs.size(); ++s)
    if (s != home && cfg.weights[s] > 0)
      order.push_back(s);
  if (order.empty())
    throw std::invalid_argument("fusion: at least two sensors with positive weight are required");

  MbDensity acc = mbs[home];
  double acc_weight = cfg.weights[home];
  GmbDensity fused;
  for (std::size_t k = 0; k < order.size(); ++k)
  {
    double const w = cfg.weights[order[k]];
    double const total = acc_weight + w;
    fused = gci_fuse_mb_pair(acc, acc_weight / total, mbs[order[k]], w / total, cfg);
    acc_weight = total;
    if (k + 1 < order.size())
      acc = gmb_to_mb_moment_match(fused);
  }
  return fused;
}

}  // namespace

GlmbDensity r_gci_glmb_fuse(std::vector<GlmbDensity> const& locals, FusionConfig const& cfg, std::size_t home_sensor)
{
  std::vector<MbDensity> mbs;
  for (auto const& g : locals)
    mbs.push_back(gmb_to_mb_moment_match(glmb_to_gmb(g)));
  auto const fused = fold_pairwise(mbs, cfg, home_sensor);
  return construct_labeled_fused(fused, locals.at(home_sensor).label_space);
}

GlmbDensity r_gci_lmb_fuse(std::vector<LmbDensity> const& locals, FusionConfig const& cfg, std::size_t home_sensor)
{
  std::vector<MbDensity> mbs;
  for (auto const& l : locals)
  {
    // Zero-existence tracks carry no mass; drop them as the moment match would.
    MbDensity mb;
    for (auto& c : lmb_to_mb(l).components)
      if (c.r > 0)
        mb.components.push_back(std::move(c));
    mbs.push_back(std::move(mb));
  }
  auto const fused = fold_pairwise(mbs, cfg, home_sensor);
  std::vector<Label> labels;
  for (auto const& c : locals.at(home_sensor).components)
    labels.push_back(c.label);
  return construct_labeled_fused(fused, labels);
}

LmbDensity classical_gci_lmb_fuse(LmbDensity const& l1, LmbDensity const& l2, FusionConfig const& cfg)
{
  validate_weights(cfg.weights, 2);
  double const w1 = cfg.weights[0];
  double const w2 = cfg.weights[1];
  if (!(w1 > 0) || !(w2 > 0))
    throw std::invalid_argument("classical_gci_lmb_fuse: both weights must be positive");

  std::set<Label> labels;
  for (auto const& c : l1.components)
    labels.insert(c.label);
  for (auto const& c : l2.components)
    labels.insert(c.label);

  std::vector<BernoulliComponent> out;
  for (auto const& l : labels)
  {
    auto const* c1 = l1.find(l);
    auto const* c2 = l2.find(l);
    if (!c1 || !c2)
    {
      // A label unknown to one sensor has existence zero there; the product annihilates it.
      out.push_back({l, 0.0, (c1 ? c1 : c2)->p});
      continue;
    }
    auto fused = gci_fuse(c1->p, w1, c2->p, w2);
    double const log_yes = w1 * safe_log(c1->r) + w2 * safe_log(c2->r) + fused.log_eta;
    double const log_no = w1 * log1m(c1->r) + w2 * log1m(c2->r);
    if (!std::isfinite(log_yes) || fused.mixture.empty())
    {
      out.push_back({l, 0.0, c1->p});
      continue;
    }
    double const hi = std::max(log_yes, log_no);
    double const r = std::exp(log_yes - hi) / (std::exp(log_yes - hi) + std::exp(log_no - hi));
    GaussianMixtured p = std::move(fused.mixture);
    if (cfg.reduction)
      p = prune_and_merge(p, cfg.reduction->prune, cfg.reduction->merge, cfg.reduction->max_components);
    out.push_back({l, r, std::move(p)});
  }
  return make_lmb(std::move(out));
}

LmbDensity classical_gci_lmb_fuse(std::vector<LmbDensity> const& locals, FusionConfig const& cfg,
                                  std::size_t home_sensor)
{
  validate_weights(cfg.weights, locals.size());
  if (home_sensor >= locals.size() || !(cfg.weights[home_sensor] > 0))
    throw std::invalid_argument("classical fusion: invalid home sensor");
  LmbDensity acc = locals[home_sensor];
  double acc_weight = cfg.weights[home_sensor];
  for (std::size_t s = 0; s < locals.size(); ++s)
  {
    if (s == home_sensor || !(cfg.weights[s] > 0))
      continue;
    double const total = acc_weight + cfg.weights[s];
    FusionConfig step = cfg;
    step.weights = {acc_weight / total, cfg.weights[s] / total};
    acc = classical_gci_lmb_fuse(acc, locals[s], step);
    acc_weight = total;
  }
  return acc;
}

}  // namespace rfs
