#include "rfs/diagnostics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace rfs
{

namespace
{

constexpr std::size_t kMaxTableEntries = std::size_t{1} << 26;

std::size_t checked_pow(std::size_t base, std::size_t n)
{
  std::size_t out = 1;
  for (std::size_t i = 0; i < n; ++i)
  {
    if (base != 0 && out > kMaxTableEntries / base)
      throw std::length_error("discrete density table too large; reduce cells, labels or max cardinality");
    out *= base;
  }
  return out;
}

double factorial(std::size_t n)
{
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i)
    f *= static_cast<double>(i);
  return f;
}

/// Decodes tuple index t (most significant digit first) into n digits base k.
void decode(std::size_t t, std::size_t k, std::size_t n, std::vector<std::size_t>& digits)
{
  digits.resize(n);
  for (std::size_t i = n; i-- > 0;)
  {
    digits[i] = t % k;
    t /= k;
  }
}

std::size_t encode(std::vector<std::size_t> const& digits, std::size_t k)
{
  std::size_t t = 0;
  for (auto d : digits)
    t = t * k + d;
  return t;
}

DiscreteMultiObjectDensity empty_table(SpacePtr space, bool labeled)
{
  if (!space)
    throw std::invalid_argument("discrete density: null space");
  DiscreteMultiObjectDensity d;
  d.space = std::move(space);
  d.labeled = labeled;
  std::size_t const k = d.element_count();
  for (std::size_t n = 0; n <= d.space->max_cardinality; ++n)
    d.values.emplace_back(checked_pow(k, n), 0.0);
  return d;
}

/// Per tuple of elements, the product of the measures of their cells.
double tuple_measure(DiscreteMultiObjectDensity const& d, std::vector<std::size_t> const& elements)
{
  double m = 1.0;
  for (auto e : elements)
    m *= d.space->measures[d.cell_of(e)];
  return m;
}

void check_compatible(WeightedDensities const& ds)
{
  if (ds.empty())
    throw std::invalid_argument("discrete GCI: no densities");
  double total = 0.0;
  for (auto const& [d, w] : ds)
  {
    if (!(w > 0))
      throw std::domain_error("discrete GCI: weights must be positive");
    total += w;
    if (d.space != ds.front().first.space || d.labeled != ds.front().first.labeled ||
        d.values.size() != ds.front().first.values.size())
      throw std::invalid_argument("discrete GCI: densities must share space, kind and cardinality limit");
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::domain_error("discrete GCI: weights must sum to one");
}

/// Weighted geometric mean, unnormalized.
DiscreteMultiObjectDensity geometric_mean(WeightedDensities const& ds)
{
  check_compatible(ds);
  DiscreteMultiObjectDensity out = ds.front().first;
  for (std::size_t n = 0; n < out.values.size(); ++n)
    for (std::size_t t = 0; t < out.values[n].size(); ++t)
    {
      double log_v = 0.0;
      bool zero = false;
      for (auto const& [d, w] : ds)
      {
        double const v = d.values[n][t];
        if (!(v > 0))
        {
          zero = true;
          break;
        }
        log_v += w * std::log(v);
      }
      out.values[n][t] = zero ? 0.0 : std::exp(log_v);
    }
  out.raw_mass = 1.0;
  return out;
}

/// Every ordering of the members (lexicographic permutations).
std::vector<std::vector<std::size_t>> orderings(std::vector<std::size_t> members)
{
  std::vector<std::vector<std::size_t>> out;
  std::sort(members.begin(), members.end());
  do
    out.push_back(members);
  while (std::next_permutation(members.begin(), members.end()));
  return out;
}

DiscreteMultiObjectDensity tabulate(SpacePtr space, std::vector<DiscreteHypothesis> const& hypotheses, bool labeled)
{
  auto d = empty_table(std::move(space), labeled);
  std::size_t const cells = d.space->cell_count();
  std::size_t const labels = d.space->labels.size();
  std::vector<std::size_t> cell_tuple;
  std::vector<std::size_t> elements;
  for (auto const& h : hypotheses)
  {
    std::size_t const n = h.members.size();
    if (n >= d.values.size() || !(h.weight > 0))
      continue;
    for (auto m : h.members)
    {
      auto it = h.densities.find(m);
      if (it == h.densities.end() || static_cast<std::size_t>(it->second.size()) != cells)
        throw DimensionMismatchError("discrete hypothesis: missing or mis-sized member density");
      if (labeled && m >= labels)
        throw std::out_of_range("discrete hypothesis: label position outside the space");
    }
    std::size_t const tuples = checked_pow(cells, n);
    for (auto const& order : orderings(h.members))
    {
      for (std::size_t t = 0; t < tuples; ++t)
      {
        decode(t, cells, n, cell_tuple);
        double v = h.weight;
        elements.resize(n);
        for (std::size_t i = 0; i < n; ++i)
        {
          v *= h.densities.at(order[i])(static_cast<Eigen::Index>(cell_tuple[i]));
          elements[i] = labeled ? cell_tuple[i] * labels + order[i] : cell_tuple[i];
        }
        d.values[n][encode(elements, d.element_count())] += v;
      }
    }
  }
  d.raw_mass = set_integral(d);
  return d;
}

/// Density values on the cells (normalized to unit mass) after the coverage check.
Eigen::VectorXd on_cells(GaussianMixtured const& gm, DiscreteSpace const& space, DiscretizeOptions const& opt)
{
  GaussianMixtured const projected = space.projection.empty() ? gm : gm.marginal(space.projection);
  Eigen::VectorXd v(static_cast<Eigen::Index>(space.cell_count()));
  double const total_weight = projected.total_weight();
  double mass = 0.0;
  for (std::size_t c = 0; c < space.cell_count(); ++c)
  {
    if (space.cells[c].size() != projected.dim())
      throw DimensionMismatchError("discretize: cell dimension differs from the (projected) state dimension");
    double const p = projected.density(space.cells[c]) / total_weight;
    v(static_cast<Eigen::Index>(c)) = p;
    mass += p * space.measures[c];
  }
  if (mass < 1.0 - opt.coverage_tolerance)
    throw CoverageError(fmt::format("discretize: grid captures only {:.9g} of a single-object density", mass));
  return v / mass;
}

class CellCache
{
public:
  CellCache(DiscreteSpace const& space, DiscretizeOptions const& opt) : space_(space), opt_(opt) {}

  Eigen::VectorXd const& operator()(DensityPtr const& p)
  {
    auto it = cache_.find(p.get());
    if (it == cache_.end())
      it = cache_.emplace(p.get(), on_cells(*p, space_, opt_)).first;
    return it->second;
  }

private:
  DiscreteSpace const& space_;
  DiscretizeOptions const& opt_;
  std::map<GaussianMixtured const*, Eigen::VectorXd> cache_;
};

/// Subsets of at most max_size of Bernoulli terms, with product weights.
std::vector<std::pair<std::vector<std::size_t>, double>> bernoulli_subsets(std::vector<double> const& r,
                                                                           std::size_t max_size)
{
  std::vector<std::pair<std::vector<std::size_t>, double>> out;
  std::vector<std::size_t> chosen;
  auto recurse = [&](auto&& self, std::size_t i, double w) -> void {
    if (!(w > 0))
      return;
    if (i == r.size())
    {
      out.emplace_back(chosen, w);
      return;
    }
    self(self, i + 1, w * (1.0 - r[i]));
    if (chosen.size() < max_size)
    {
      chosen.push_back(i);
      self(self, i + 1, w * r[i]);
      chosen.pop_back();
    }
  };
  recurse(recurse, 0, 1.0);
  return out;
}

DiscreteMultiObjectDensity finish(DiscreteMultiObjectDensity d, DiscretizeOptions const& opt)
{
  double const mass = set_integral(d);
  d.raw_mass = mass;
  if (opt.renormalize && mass > 0)
    for (auto& vn : d.values)
      for (auto& v : vn)
        v /= mass;
  return d;
}

}  // namespace

std::size_t DiscreteSpace::label_position(Label const& l) const
{
  auto it = std::find(labels.begin(), labels.end(), l);
  if (it == labels.end())
    throw std::out_of_range("label " + to_string(l) + " is not part of the discrete space");
  return static_cast<std::size_t>(std::distance(labels.begin(), it));
}

DiscreteSpace DiscreteSpace::grid(Eigen::VectorXd const& lo, Eigen::VectorXd const& hi,
                                  std::vector<std::size_t> const& counts, std::size_t max_cardinality,
                                  std::vector<Label> labels, std::vector<Eigen::Index> projection)
{
  auto const dim = static_cast<std::size_t>(lo.size());
  if (hi.size() != lo.size() || counts.size() != dim || dim == 0)
    throw DimensionMismatchError("DiscreteSpace::grid: bounds and counts must agree");
  DiscreteSpace s;
  s.max_cardinality = max_cardinality;
  s.labels = std::move(labels);
  s.projection = std::move(projection);
  Eigen::VectorXd step(lo.size());
  double measure = 1.0;
  std::size_t total = 1;
  for (std::size_t d = 0; d < dim; ++d)
  {
    auto const i = static_cast<Eigen::Index>(d);
    if (counts[d] == 0 || !(hi(i) > lo(i)))
      throw std::invalid_argument("DiscreteSpace::grid: empty axis");
    step(i) = (hi(i) - lo(i)) / static_cast<double>(counts[d]);
    measure *= step(i);
    total *= counts[d];
  }
  std::vector<std::size_t> digits;
  for (std::size_t t = 0; t < total; ++t)
  {
    Eigen::VectorXd c(lo.size());
    std::size_t rest = t;
    for (std::size_t d = dim; d-- > 0;)
    {
      auto const i = static_cast<Eigen::Index>(d);
      c(i) = lo(i) + (static_cast<double>(rest % counts[d]) + 0.5) * step(i);
      rest /= counts[d];
    }
    s.cells.push_back(std::move(c));
    s.measures.push_back(measure);
  }
  return s;
}

std::size_t DiscreteMultiObjectDensity::element_count() const
{
  return labeled ? space->cell_count() * space->labels.size() : space->cell_count();
}

std::size_t DiscreteMultiObjectDensity::cell_of(std::size_t element) const
{
  return labeled ? element / space->labels.size() : element;
}

std::size_t DiscreteMultiObjectDensity::label_of(std::size_t element) const
{
  if (!labeled)
    throw std::logic_error("label_of: unlabeled density");
  return element % space->labels.size();
}

DiscreteMultiObjectDensity discrete_glmb(SpacePtr space, std::vector<DiscreteHypothesis> const& hypotheses)
{
  return tabulate(std::move(space), hypotheses, true);
}

DiscreteMultiObjectDensity discrete_gmb(SpacePtr space, std::vector<DiscreteHypothesis> const& hypotheses)
{
  return tabulate(std::move(space), hypotheses, false);
}

double set_integral(DiscreteMultiObjectDensity const& d)
{
  double total = 0.0;
  std::size_t const k = d.element_count();
  std::vector<std::size_t> elements;
  for (std::size_t n = 0; n < d.values.size(); ++n)
  {
    double sum = 0.0;
    for (std::size_t t = 0; t < d.values[n].size(); ++t)
    {
      double const v = d.values[n][t];
      if (v == 0.0)
        continue;
      decode(t, k, n, elements);
      sum += v * tuple_measure(d, elements);
    }
    total += sum / factorial(n);
  }
  return total;
}

DiscreteMultiObjectDensity discretize(LmbDensity const& d, SpacePtr space, DiscretizeOptions const& opt)
{
  std::vector<double> r;
  std::vector<std::size_t> positions;
  std::vector<Eigen::VectorXd> cells;
  for (auto const& c : d.components)
  {
    r.push_back(c.r);
    positions.push_back(space->label_position(c.label));
    cells.push_back(on_cells(c.p, *space, opt));
  }
  std::vector<DiscreteHypothesis> hyps;
  for (auto const& [subset, w] : bernoulli_subsets(r, space->max_cardinality))
  {
    DiscreteHypothesis h;
    h.weight = w;
    for (auto i : subset)
    {
      h.members.push_back(positions[i]);
      h.densities[positions[i]] = cells[i];
    }
    hyps.push_back(std::move(h));
  }
  return finish(discrete_glmb(std::move(space), hyps), opt);
}

DiscreteMultiObjectDensity discretize(GlmbDensity const& d, SpacePtr space, DiscretizeOptions const& opt)
{
  CellCache cache(*space, opt);
  std::vector<DiscreteHypothesis> hyps;
  for (auto const& h : d.hypotheses)
  {
    if (h.labels.size() > space->max_cardinality)
      continue;
    DiscreteHypothesis dh;
    dh.weight = h.weight;
    auto const& comp = d.components.at(h.component);
    for (auto const& l : h.labels)
    {
      auto const pos = space->label_position(l);
      dh.members.push_back(pos);
      dh.densities[pos] = cache(comp.at(l));
    }
    hyps.push_back(std::move(dh));
  }
  return finish(discrete_glmb(std::move(space), hyps), opt);
}

DiscreteMultiObjectDensity discretize(MbDensity const& d, SpacePtr space, DiscretizeOptions const& opt)
{
  std::vector<double> r;
  std::vector<Eigen::VectorXd> cells;
  for (auto const& c : d.components)
  {
    r.push_back(c.r);
    cells.push_back(on_cells(c.p, *space, opt));
  }
  std::vector<DiscreteHypothesis> hyps;
  for (auto const& [subset, w] : bernoulli_subsets(r, space->max_cardinality))
  {
    DiscreteHypothesis h;
    h.weight = w;
    for (auto i : subset)
    {
      h.members.push_back(i);
      h.densities[i] = cells[i];
    }
    hyps.push_back(std::move(h));
  }
  return finish(discrete_gmb(std::move(space), hyps), opt);
}

DiscreteMultiObjectDensity discretize(GmbDensity const& d, SpacePtr space, DiscretizeOptions const& opt)
{
  CellCache cache(*space, opt);
  std::vector<DiscreteHypothesis> hyps;
  for (auto const& h : d.hypotheses)
  {
    if (h.indices.size() > space->max_cardinality)
      continue;
    DiscreteHypothesis dh;
    dh.weight = h.weight;
    auto const& set = d.density_sets.at(h.tag);
    for (auto i : h.indices)
    {
      dh.members.push_back(i);
      dh.densities[i] = cache(set.at(i));
    }
    hyps.push_back(std::move(dh));
  }
  return finish(discrete_gmb(std::move(space), hyps), opt);
}

DiscreteMultiObjectDensity marginalize(DiscreteMultiObjectDensity const& labeled)
{
  if (!labeled.labeled)
    throw std::invalid_argument("marginalize: density is already unlabeled");
  auto out = empty_table(labeled.space, false);
  out.values.resize(labeled.values.size());
  std::size_t const k = labeled.element_count();
  std::size_t const cells = labeled.space->cell_count();
  std::vector<std::size_t> elements;
  std::vector<std::size_t> cell_tuple;
  for (std::size_t n = 0; n < labeled.values.size(); ++n)
    for (std::size_t t = 0; t < labeled.values[n].size(); ++t)
    {
      double const v = labeled.values[n][t];
      if (v == 0.0)
        continue;
      decode(t, k, n, elements);
      cell_tuple.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        cell_tuple[i] = labeled.cell_of(elements[i]);
      out.values[n][encode(cell_tuple, cells)] += v;
    }
  out.raw_mass = labeled.raw_mass;
  return out;
}

DiscreteMultiObjectDensity gci_fuse_discrete(WeightedDensities const& ds)
{
  auto out = geometric_mean(ds);
  double const c = set_integral(out);
  if (!(c > 0))
    throw IncompatiblePosteriorsError("discrete GCI: densities have disjoint supports (c = 0)",
                                      IncompatiblePosteriorsError::Payload{-std::numeric_limits<double>::infinity(), 0,
                                                                           0});
  for (auto& vn : out.values)
    for (auto& v : vn)
      v /= c;
  return out;
}

double gci_coefficient(WeightedDensities const& ds)
{
  return set_integral(geometric_mean(ds));
}

Divergence gci_divergence(WeightedDensities const& ds)
{
  double const c = gci_coefficient(ds);
  if (!(c > 0))
    return {0.0, true};
  return {-std::log(c), false};
}

double total_variation(DiscreteMultiObjectDensity const& a, DiscreteMultiObjectDensity const& b)
{
  if (a.space != b.space || a.labeled != b.labeled || a.values.size() != b.values.size())
    throw std::invalid_argument("total_variation: densities must share space, kind and cardinality limit");
  DiscreteMultiObjectDensity diff = a;
  for (std::size_t n = 0; n < diff.values.size(); ++n)
    for (std::size_t t = 0; t < diff.values[n].size(); ++t)
      diff.values[n][t] = std::abs(a.values[n][t] - b.values[n][t]);
  return 0.5 * set_integral(diff);
}

ConditionalMultilabel::ConditionalMultilabel(DiscreteMultiObjectDensity labeled)
  : labeled_(std::move(labeled)), unlabeled_(marginalize(labeled_))
{
}

double ConditionalMultilabel::operator()(std::vector<std::size_t> const& cells,
                                         std::vector<std::size_t> const& labels) const
{
  if (cells.size() != labels.size())
    throw DimensionMismatchError("conditional: one label per state required");
  std::size_t const n = cells.size();
  if (n == 0)
    return 1.0;
  if (n >= unlabeled_.values.size())
    throw std::out_of_range("conditional: cardinality above the space limit");
  double const marginal = unlabeled_.values[n][encode(cells, labeled_.space->cell_count())];
  if (!(marginal > 0))
    throw UndefinedConditionalError("conditional label distribution undefined where the marginal vanishes");
  std::vector<std::size_t> elements(n);
  for (std::size_t i = 0; i < n; ++i)
    elements[i] = cells[i] * labeled_.space->labels.size() + labels[i];
  return labeled_.values[n][encode(elements, labeled_.element_count())] / marginal;
}

double ConditionalMultilabel::total(std::vector<std::size_t> const& cells) const
{
  std::size_t const n = cells.size();
  std::size_t const nl = labeled_.space->labels.size();
  std::size_t const tuples = checked_pow(nl, n);
  std::vector<std::size_t> labels;
  double sum = 0.0;
  for (std::size_t t = 0; t < tuples; ++t)
  {
    decode(t, nl, n, labels);
    sum += (*this)(cells, labels);
  }
  return sum;
}

double joint_existence_probability(DiscreteMultiObjectDensity const& labeled, std::vector<std::size_t> const& labels)
{
  if (!labeled.labeled)
    throw std::invalid_argument("joint_existence_probability: labeled density required");
  std::size_t const n = labels.size();
  if (n >= labeled.values.size())
    return 0.0;
  std::size_t const cells = labeled.space->cell_count();
  std::size_t const nl = labeled.space->labels.size();
  std::vector<std::size_t> cell_tuple;
  std::vector<std::size_t> elements(n);
  double sum = 0.0;
  for (std::size_t t = 0; t < checked_pow(cells, n); ++t)
  {
    decode(t, cells, n, cell_tuple);
    double m = 1.0;
    for (std::size_t i = 0; i < n; ++i)
    {
      elements[i] = cell_tuple[i] * nl + labels[i];
      m *= labeled.space->measures[cell_tuple[i]];
    }
    sum += labeled.values[n][encode(elements, labeled.element_count())] * m;
  }
  return sum;
}

std::string DiagnosticsReport::csv_header()
{
  return "time,G_labeled,G_unlabeled,d_G,d_G_upper,p_yes_labeled,p_yes_unlabeled";
}

std::string DiagnosticsReport::csv_row(long time) const
{
  auto num = [](double v, bool inf) { return inf ? std::string("inf") : fmt::format("{:.9g}", v); };
  return fmt::format("{},{},{},{},{},{},{}", time, num(G_labeled, G_labeled_infinite),
                     num(G_unlabeled, G_unlabeled_infinite), num(d_G, d_G_infinite),
                     num(d_G_upper, d_G_upper_infinite), num(p_yes_labeled, false), num(p_yes_unlabeled, false));
}

DiagnosticsReport label_inconsistency_indicator(WeightedDensities const& labeled)
{
  check_compatible(labeled);
  for (auto const& [d, w] : labeled)
    if (!d.labeled)
      throw std::invalid_argument("label_inconsistency_indicator: labeled densities required");

  WeightedDensities unlabeled;
  for (auto const& [d, w] : labeled)
    unlabeled.emplace_back(marginalize(d), w);

  DiagnosticsReport rep;
  double const c_lab = gci_coefficient(labeled);
  auto const fused = geometric_mean(unlabeled);
  double const c_unl = set_integral(fused);

  double log_empty = 0.0;  // log prod_s pi_s(empty)^w_s, identical for labeled and unlabeled
  bool empty_zero = false;
  for (auto const& [d, w] : labeled)
  {
    if (!(d.empty_set_value() > 0))
      empty_zero = true;
    else
      log_empty += w * std::log(d.empty_set_value());
  }

  rep.G_labeled_infinite = !(c_lab > 0);
  rep.G_labeled = rep.G_labeled_infinite ? 0.0 : -std::log(c_lab);
  rep.G_unlabeled_infinite = !(c_unl > 0);
  rep.G_unlabeled = rep.G_unlabeled_infinite ? 0.0 : -std::log(c_unl);
  if (rep.G_unlabeled_infinite)
    throw IncompatiblePosteriorsError("label_inconsistency_indicator: unlabeled marginals are incompatible",
                                      IncompatiblePosteriorsError::Payload{-std::numeric_limits<double>::infinity(), 0,
                                                                           0});

  // E[mu] under the unlabeled fused density, by full enumeration.
  SpacePtr const space = labeled.front().first.space;
  std::size_t const cells = space->cell_count();
  std::size_t const nl = space->labels.size();
  std::size_t const kl = cells * nl;
  double expectation = 0.0;
  std::vector<std::size_t> cell_tuple;
  std::vector<std::size_t> label_tuple;
  std::vector<std::size_t> elements;
  for (std::size_t n = 0; n < fused.values.size(); ++n)
  {
    double sum = 0.0;
    std::size_t const label_tuples = checked_pow(nl, n);
    for (std::size_t t = 0; t < fused.values[n].size(); ++t)
    {
      double const pw = fused.values[n][t] / c_unl;
      if (!(pw > 0))
        continue;
      decode(t, cells, n, cell_tuple);
      double mu = 0.0;
      for (std::size_t lt = 0; lt < label_tuples; ++lt)
      {
        decode(lt, nl, n, label_tuple);
        elements.resize(n);
        for (std::size_t i = 0; i < n; ++i)
          elements[i] = cell_tuple[i] * nl + label_tuple[i];
        std::size_t const e = encode(elements, kl);
        double log_term = 0.0;
        bool zero = false;
        for (std::size_t s = 0; s < labeled.size(); ++s)
        {
          double const joint = labeled[s].first.values[n][e];
          double const marginal = unlabeled[s].first.values[n][t];
          if (!(joint > 0))
          {
            zero = true;
            break;
          }
          log_term += labeled[s].second * std::log(joint / marginal);
        }
        if (!zero)
          mu += std::exp(log_term);
      }
      double m = 1.0;
      for (auto c : cell_tuple)
        m *= space->measures[c];
      sum += pw * mu * m;
    }
    expectation += sum / factorial(n);
  }

  rep.d_G_infinite = !(expectation > 0);
  rep.d_G = rep.d_G_infinite ? 0.0 : -std::log(expectation);

  double const fused_empty = empty_zero ? 0.0 : std::exp(log_empty) / c_unl;
  rep.d_G_upper_infinite = !(fused_empty > 0);
  rep.d_G_upper = rep.d_G_upper_infinite ? 0.0 : -std::log(fused_empty);
  rep.p_yes_unlabeled = 1.0 - fused_empty;
  rep.p_yes_labeled = rep.G_labeled_infinite ? 0.0 : 1.0 - (empty_zero ? 0.0 : std::exp(log_empty) / c_lab);

  if (!rep.G_labeled_infinite && !rep.d_G_infinite)
    rep.identity_residual = std::abs(rep.G_labeled - (rep.G_unlabeled + rep.d_G));
  else
    rep.identity_residual = rep.G_labeled_infinite == rep.d_G_infinite ? 0.0 : std::numeric_limits<double>::infinity();
  return rep;
}

double labeled_yes_probability(double d_G, double p_yes_unlabeled)
{
  return 1.0 - std::exp(d_G) * (1.0 - p_yes_unlabeled);
}

double corollary2_check(DiagnosticsReport const& report)
{
  if (report.d_G_infinite)
    return report.p_yes_labeled == 0.0 || report.p_yes_unlabeled == 1.0 ? 0.0 : std::abs(report.p_yes_labeled);
  return std::abs(report.p_yes_labeled - labeled_yes_probability(report.d_G, report.p_yes_unlabeled));
}

double yes_probability_threshold(double p_yes_unlabeled, double target)
{
  if (!(p_yes_unlabeled < 1) || !(target < 1) || !(target < p_yes_unlabeled))
    throw std::domain_error("yes_probability_threshold: need target < P_y(unlabeled) < 1");
  return std::log((1.0 - target) / (1.0 - p_yes_unlabeled));
}

double yes_probability_threshold_bisection(double p_yes_unlabeled, double target, double tol)
{
  if (!(target < p_yes_unlabeled) || !(p_yes_unlabeled < 1))
    throw std::domain_error("yes_probability_threshold_bisection: need target < P_y(unlabeled) < 1");
  double lo = 0.0;
  double hi = 1.0;
  while (labeled_yes_probability(hi, p_yes_unlabeled) > target)
    hi *= 2.0;
  while (hi - lo > tol)
  {
    double const mid = 0.5 * (lo + hi);
    if (labeled_yes_probability(mid, p_yes_unlabeled) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

DiscreteSpace covering_grid(std::vector<GaussianMixtured> const& densities, std::vector<Eigen::Index> const& projection,
                            double span_sigmas, std::size_t cells_per_axis, std::size_t max_cardinality,
                            std::vector<Label> labels)
{
  if (densities.empty())
    throw std::invalid_argument("covering_grid: no densities");
  auto const dim = static_cast<Eigen::Index>(projection.size());
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  for (auto const& gm : densities)
    for (auto const& c : gm.marginal(projection))
    {
      Eigen::VectorXd const sd = c.gaussian.covariance().diagonal().cwiseSqrt();
      lo = lo.cwiseMin(c.gaussian.mean() - span_sigmas * sd);
      hi = hi.cwiseMax(c.gaussian.mean() + span_sigmas * sd);
    }
  return DiscreteSpace::grid(lo, hi, std::vector<std::size_t>(projection.size(), cells_per_axis), max_cardinality,
                             std::move(labels), projection);
}

DiagnosticsReport diagnose_labeled(std::vector<GlmbDensity> const& densities, std::vector<double> const& weights,
                                   std::vector<Eigen::Index> const& projection, std::size_t cells_per_axis,
                                   double span_sigmas, DiscretizeOptions const& opt)
{
  if (densities.size() != weights.size() || densities.size() < 2)
    throw std::invalid_argument("diagnose_labeled: need at least two densities with one weight each");
  std::set<Label> labels;
  std::vector<GaussianMixtured> mixtures;
  std::size_t max_cardinality = 0;
  for (auto const& g : densities)
  {
    labels.insert(g.label_space.begin(), g.label_space.end());
    for (auto const& h : g.hypotheses)
      if (h.weight > 0)
        max_cardinality = std::max(max_cardinality, h.labels.size());
    for (auto const& [c, per_label] : g.components)
      for (auto const& [l, p] : per_label)
        mixtures.push_back(*p);
  }
  if (mixtures.empty())
    mixtures.push_back(GaussianMixtured(Gaussiand(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(projection.size())),
                                                  Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(projection.size()),
                                                                            static_cast<Eigen::Index>(projection.size())))));
  auto const space = std::make_shared<DiscreteSpace const>(covering_grid(
      mixtures, projection, span_sigmas, cells_per_axis, max_cardinality, std::vector<Label>(labels.begin(), labels.end())));
  WeightedDensities ds;
  for (std::size_t s = 0; s < densities.size(); ++s)
    ds.emplace_back(discretize(densities[s], space, opt), weights[s]);
  return label_inconsistency_indicator(ds);
}

}  // namespace rfs
