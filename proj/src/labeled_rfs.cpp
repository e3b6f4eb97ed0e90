#include "rfs/labeled_rfs.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace rfs
{

std::string to_string(Label const& l)
{
  return fmt::format("({},{})", l.birth_time, l.index);
}

DensityPtr make_density(GaussianMixtured gm)
{
  return std::make_shared<GaussianMixtured const>(std::move(gm));
}

GaussianMixtured blend(std::vector<std::pair<double, DensityPtr>> const& terms)
{
  // Pool weights per distinct density so shared densities are not duplicated.
  std::vector<std::pair<double, DensityPtr>> pooled;
  std::map<GaussianMixtured const*, std::size_t> slot;
  for (auto const& [w, p] : terms)
  {
    if (!(w > 0))
      continue;
    auto [it, inserted] = slot.try_emplace(p.get(), pooled.size());
    if (inserted)
      pooled.emplace_back(w, p);
    else
      pooled[it->second].first += w;
  }
  double total = 0.0;
  for (auto const& [w, p] : pooled)
    total += w;
  if (pooled.empty() || !(total > 0))
    throw DegenerateMixtureError("blend: no positive weight");

  GaussianMixtured out;
  for (auto const& [w, p] : pooled)
  {
    double const pw = p->total_weight();
    for (auto const& c : *p)
      out.add(w / total * c.weight / pw, c.gaussian);
  }
  return out;
}

BernoulliComponent const* LmbDensity::find(Label const& l) const
{
  auto it = std::lower_bound(components.begin(), components.end(), l,
                             [](BernoulliComponent const& c, Label const& x) { return c.label < x; });
  if (it == components.end() || it->label != l)
    return nullptr;
  return &*it;
}

LmbDensity make_lmb(std::vector<BernoulliComponent> components)
{
  std::sort(components.begin(), components.end(),
            [](BernoulliComponent const& a, BernoulliComponent const& b) { return a.label < b.label; });
  for (std::size_t i = 1; i < components.size(); ++i)
    if (components[i].label == components[i - 1].label)
      throw LabelCollisionError("duplicate label " + to_string(components[i].label));
  return LmbDensity{std::move(components)};
}

namespace
{

void check_mixture(GaussianMixtured const& gm, std::string const& what)
{
  if (gm.empty())
    throw SchemaError(what + ": empty mixture");
  double total = 0.0;
  for (auto const& c : gm)
  {
    if (!(c.weight >= 0) || !std::isfinite(c.weight))
      throw SchemaError(what + ": negative or non-finite component weight");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw SchemaError(what + fmt::format(": mixture weights sum to {} (expected 1)", total));
}

void check_weights(double total, std::string const& what)
{
  if (std::abs(total - 1.0) > 1e-9)
    throw SchemaError(what + fmt::format(": hypothesis weights sum to {} (expected 1)", total));
}

template <typename T>
bool strictly_increasing(std::vector<T> const& v)
{
  return std::adjacent_find(v.begin(), v.end(), [](T const& a, T const& b) { return !(a < b); }) == v.end();
}

}  // namespace

void validate(LmbDensity const& d)
{
  for (std::size_t i = 0; i < d.components.size(); ++i)
  {
    auto const& c = d.components[i];
    if (i > 0 && !(d.components[i - 1].label < c.label))
      throw SchemaError("lmb: labels must be sorted and distinct");
    if (!(c.r >= 0 && c.r <= 1))
      throw SchemaError("lmb: existence probability outside [0,1] for " + to_string(c.label));
    check_mixture(c.p, "lmb " + to_string(c.label));
  }
}

void validate(MbDensity const& d)
{
  for (std::size_t i = 0; i < d.components.size(); ++i)
  {
    auto const& c = d.components[i];
    if (i > 0 && !(d.components[i - 1].index < c.index))
      throw SchemaError("mb: indices must be sorted and distinct");
    if (!(c.r >= 0 && c.r <= 1))
      throw SchemaError("mb: existence probability outside [0,1]");
    check_mixture(c.p, fmt::format("mb index {}", c.index));
  }
}

void validate(GlmbDensity const& d)
{
  if (!strictly_increasing(d.label_space))
    throw SchemaError("glmb: label space must be sorted and distinct");
  double total = 0.0;
  for (auto const& h : d.hypotheses)
  {
    if (!(h.weight >= 0) || !std::isfinite(h.weight))
      throw SchemaError("glmb: negative hypothesis weight");
    if (!strictly_increasing(h.labels))
      throw SchemaError("glmb: hypothesis labels must be sorted and distinct");
    auto const comp = d.components.find(h.component);
    for (auto const& l : h.labels)
    {
      if (!std::binary_search(d.label_space.begin(), d.label_space.end(), l))
        throw SchemaError("glmb: hypothesis label outside the label space");
      if (comp == d.components.end() || !comp->second.contains(l))
        throw SchemaError(fmt::format("glmb: missing density for {} in component {}", to_string(l), h.component));
    }
    total += h.weight;
  }
  check_weights(total, "glmb");
  for (auto const& [c, densities] : d.components)
    for (auto const& [l, p] : densities)
      check_mixture(*p, fmt::format("glmb component {} {}", c, to_string(l)));
}

void validate(GmbDensity const& d)
{
  if (!strictly_increasing(d.index_space))
    throw SchemaError("gmb: index space must be sorted and distinct");
  double total = 0.0;
  for (auto const& h : d.hypotheses)
  {
    if (!(h.weight >= 0) || !std::isfinite(h.weight))
      throw SchemaError("gmb: negative hypothesis weight");
    if (!strictly_increasing(h.indices))
      throw SchemaError("gmb: hypothesis indices must be sorted and distinct");
    auto const set = d.density_sets.find(h.tag);
    for (auto i : h.indices)
    {
      if (!std::binary_search(d.index_space.begin(), d.index_space.end(), i))
        throw SchemaError("gmb: hypothesis index outside the index space");
      if (set == d.density_sets.end() || !set->second.contains(i))
        throw SchemaError(fmt::format("gmb: missing density for index {} in set {}", i, h.tag));
    }
    total += h.weight;
  }
  check_weights(total, "gmb");
  for (auto const& [t, densities] : d.density_sets)
    for (auto const& [i, p] : densities)
      check_mixture(*p, fmt::format("gmb set {} index {}", t, i));
}

GmbDensity glmb_to_gmb(GlmbDensity const& g)
{
  auto index_of = [&](Label const& l) {
    auto it = std::lower_bound(g.label_space.begin(), g.label_space.end(), l);
    if (it == g.label_space.end() || *it != l)
      throw SchemaError("glmb_to_gmb: label outside the label space");
    return static_cast<std::size_t>(std::distance(g.label_space.begin(), it));
  };

  GmbDensity out;
  out.index_space.resize(g.label_space.size());
  for (std::size_t i = 0; i < g.label_space.size(); ++i)
    out.index_space[i] = i;
  for (auto const& h : g.hypotheses)
  {
    GmbHypothesis gh;
    gh.tag = h.component;
    gh.weight = h.weight;
    for (auto const& l : h.labels)
      gh.indices.push_back(index_of(l));
    out.hypotheses.push_back(std::move(gh));
  }
  for (auto const& [c, densities] : g.components)
  {
    auto& set = out.density_sets[c];
    for (auto const& [l, p] : densities)
      set[index_of(l)] = p;
  }
  return out;
}

MbDensity lmb_to_mb(LmbDensity const& l)
{
  MbDensity out;
  for (std::size_t i = 0; i < l.components.size(); ++i)
    out.components.push_back({i, l.components[i].r, l.components[i].p});
  return out;
}

namespace
{

/// All subsets of n Bernoulli terms with product weights; zero-weight subsets skipped.
template <typename Visit>
void for_each_subset(std::vector<double> const& r, Visit&& visit)
{
  std::size_t const n = r.size();
  std::vector<std::size_t> members;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask)
  {
    double w = 1.0;
    members.clear();
    for (std::size_t i = 0; i < n; ++i)
    {
      if (mask & (std::uint64_t{1} << i))
      {
        w *= r[i];
        members.push_back(i);
      }
      else
      {
        w *= 1.0 - r[i];
      }
    }
    if (w > 0)
      visit(members, w);
  }
}

}  // namespace

GmbDensity mb_to_gmb(MbDensity const& m, std::size_t max_components)
{
  if (m.components.size() > max_components)
    throw std::invalid_argument("mb_to_gmb: too many components for subset enumeration");
  GmbDensity out;
  std::vector<double> r;
  auto& set = out.density_sets[0];
  for (auto const& c : m.components)
  {
    out.index_space.push_back(c.index);
    r.push_back(c.r);
    set[c.index] = make_density(c.p);
  }
  for_each_subset(r, [&](std::vector<std::size_t> const& members, double w) {
    GmbHypothesis h;
    h.weight = w;
    for (auto i : members)
      h.indices.push_back(m.components[i].index);
    out.hypotheses.push_back(std::move(h));
  });
  return out;
}

LmbDensity glmb_to_lmb(GlmbDensity const& g)
{
  std::map<Label, double> r;
  std::map<Label, std::vector<std::pair<double, DensityPtr>>> terms;
  for (auto const& h : g.hypotheses)
  {
    if (!(h.weight > 0))
      continue;
    auto const& comp = g.components.at(h.component);
    for (auto const& l : h.labels)
    {
      r[l] += h.weight;
      terms[l].emplace_back(h.weight, comp.at(l));
    }
  }
  LmbDensity out;
  for (auto const& [l, rl] : r)
  {
    if (rl < 1e-12)
      continue;
    out.components.push_back({l, std::min(rl, 1.0), blend(terms[l])});
  }
  return out;
}

GlmbDensity lmb_to_glmb(LmbDensity const& l, std::size_t max_components)
{
  if (l.components.size() > max_components)
    throw std::invalid_argument("lmb_to_glmb: too many components for subset enumeration");
  GlmbDensity out;
  std::vector<double> r;
  auto& comp = out.components[0];
  for (auto const& c : l.components)
  {
    out.label_space.push_back(c.label);
    r.push_back(c.r);
    comp[c.label] = make_density(c.p);
  }
  for_each_subset(r, [&](std::vector<std::size_t> const& members, double w) {
    GlmbHypothesis h;
    h.weight = w;
    for (auto i : members)
      h.labels.push_back(l.components[i].label);
    out.hypotheses.push_back(std::move(h));
  });
  return out;
}

GlmbDensity glmb_prune(GlmbDensity const& g, double threshold)
{
  if (g.hypotheses.empty())
    return g;
  GlmbDensity out;
  out.label_space = g.label_space;
  for (auto const& h : g.hypotheses)
    if (h.weight >= threshold && h.weight > 0)
      out.hypotheses.push_back(h);
  if (out.hypotheses.empty())
    out.hypotheses.push_back(*std::max_element(g.hypotheses.begin(), g.hypotheses.end(),
                                               [](auto const& a, auto const& b) { return a.weight < b.weight; }));
  double total = 0.0;
  for (auto const& h : out.hypotheses)
    total += h.weight;
  for (auto& h : out.hypotheses)
  {
    h.weight /= total;
    out.components[h.component] = g.components.at(h.component);
  }
  return out;
}

namespace
{

std::vector<double> bernoulli_convolution(std::vector<double> const& r)
{
  std::vector<double> dist{1.0};
  for (double ri : r)
  {
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t n = 0; n < dist.size(); ++n)
    {
      next[n] += dist[n] * (1.0 - ri);
      next[n + 1] += dist[n] * ri;
    }
    dist = std::move(next);
  }
  return dist;
}

template <typename Hypotheses, typename SetOf>
std::vector<double> group_by_size(Hypotheses const& hyps, std::size_t space_size, SetOf set_of)
{
  std::vector<double> dist(space_size + 1, 0.0);
  for (auto const& h : hyps)
    dist.at(set_of(h).size()) += h.weight;
  return dist;
}

}  // namespace

std::vector<double> cardinality_distribution(LmbDensity const& d)
{
  std::vector<double> r;
  for (auto const& c : d.components)
    r.push_back(c.r);
  return bernoulli_convolution(r);
}

std::vector<double> cardinality_distribution(MbDensity const& d)
{
  std::vector<double> r;
  for (auto const& c : d.components)
    r.push_back(c.r);
  return bernoulli_convolution(r);
}

std::vector<double> cardinality_distribution(GlmbDensity const& d)
{
  return group_by_size(d.hypotheses, d.label_space.size(), [](GlmbHypothesis const& h) { return h.labels; });
}

std::vector<double> cardinality_distribution(GmbDensity const& d)
{
  return group_by_size(d.hypotheses, d.index_space.size(), [](GmbHypothesis const& h) { return h.indices; });
}

GaussianMixtured phd(LmbDensity const& d)
{
  return phd(lmb_to_mb(d));
}

GaussianMixtured phd(MbDensity const& d)
{
  GaussianMixtured out;
  for (auto const& c : d.components)
  {
    double const pw = c.p.total_weight();
    for (auto const& g : c.p)
      out.add(c.r * g.weight / pw, g.gaussian);
  }
  return out;
}

GaussianMixtured phd(GlmbDensity const& d)
{
  return phd(glmb_to_gmb(d));
}

GaussianMixtured phd(GmbDensity const& d)
{
  // v(x) = sum_hyp w sum_{i in I} p^(tag, i)(x), pooled per distinct density.
  std::vector<std::pair<double, DensityPtr>> pooled;
  std::map<GaussianMixtured const*, std::size_t> slot;
  for (auto const& h : d.hypotheses)
  {
    if (!(h.weight > 0))
      continue;
    auto const& set = d.density_sets.at(h.tag);
    for (auto i : h.indices)
    {
      auto const& p = set.at(i);
      auto [it, inserted] = slot.try_emplace(p.get(), pooled.size());
      if (inserted)
        pooled.emplace_back(h.weight, p);
      else
        pooled[it->second].first += h.weight;
    }
  }
  GaussianMixtured out;
  for (auto const& [w, p] : pooled)
  {
    double const pw = p->total_weight();
    for (auto const& g : *p)
      out.add(w * g.weight / pw, g.gaussian);
  }
  return out;
}

double no_object_probability(LmbDensity const& d)
{
  double p = 1.0;
  for (auto const& c : d.components)
    p *= 1.0 - c.r;
  return p;
}

double no_object_probability(MbDensity const& d)
{
  double p = 1.0;
  for (auto const& c : d.components)
    p *= 1.0 - c.r;
  return p;
}

double no_object_probability(GlmbDensity const& d)
{
  double p = 0.0;
  for (auto const& h : d.hypotheses)
    if (h.labels.empty())
      p += h.weight;
  return p;
}

double no_object_probability(GmbDensity const& d)
{
  double p = 0.0;
  for (auto const& h : d.hypotheses)
    if (h.indices.empty())
      p += h.weight;
  return p;
}

}  // namespace rfs
