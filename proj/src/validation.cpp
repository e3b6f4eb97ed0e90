#include "rfs/validation.hpp"

#include "rfs/fusion.hpp"
#include "rfs/ospa.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rfs
{

namespace
{

double uniform(std::mt19937_64& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi)
{
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random cell density with unit mass; with some probability one cell is a hole.
Eigen::VectorXd random_cell_density(std::mt19937_64& rng, DiscreteSpace const& space)
{
  auto const k = static_cast<Eigen::Index>(space.cell_count());
  Eigen::VectorXd v(k);
  for (Eigen::Index i = 0; i < k; ++i)
    v(i) = uniform(rng, 0.05, 1.0);
  if (k > 1 && uniform(rng, 0, 1) < 0.25)
    v(static_cast<Eigen::Index>(pick(rng, 0, static_cast<std::size_t>(k - 1)))) = 0.0;
  double mass = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    mass += v(i) * space.measures[static_cast<std::size_t>(i)];
  return v / mass;
}

std::vector<std::size_t> random_subset(std::mt19937_64& rng, std::size_t universe, std::size_t size)
{
  std::vector<std::size_t> all(universe);
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(size);
  std::sort(all.begin(), all.end());
  return all;
}

GaussianMixtured random_mixture(std::mt19937_64& rng, Eigen::Index dim, double spread)
{
  GaussianMixtured gm;
  std::size_t const n = pick(rng, 1, 2);
  for (std::size_t c = 0; c < n; ++c)
  {
    Eigen::VectorXd mean(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
      mean(i) = uniform(rng, -spread, spread);
    Eigen::MatrixXd A(dim, dim);
    for (Eigen::Index i = 0; i < A.size(); ++i)
      A(i) = uniform(rng, -0.5, 0.5);
    Eigen::MatrixXd cov = A * A.transpose() + Eigen::MatrixXd::Identity(dim, dim) * uniform(rng, 0.5, 2.0);
    gm.add(uniform(rng, 0.2, 1.0), Gaussiand(mean, cov));
  }
  return normalized(gm);
}

SuiteResult finish(SuiteResult r)
{
  r.detail = fmt::format("{} instances, {} failures, worst {:.3e} (tolerance {:.1e})", r.instances, r.failures,
                         r.worst, r.tolerance);
  return r;
}

double brute_force_ospa(std::vector<Eigen::VectorXd> X, std::vector<Eigen::VectorXd> Y, OspaParams const& params)
{
  if (X.size() > Y.size())
    std::swap(X, Y);
  std::size_t const m = X.size();
  std::size_t const n = Y.size();
  if (n == 0)
    return 0.0;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do
  {
    double cost = 0.0;
    for (std::size_t i = 0; i < m; ++i)
    {
      double const d = std::min(params.cutoff, (X[i].head<2>() - Y[perm[i]].head<2>()).norm());
      cost += std::pow(d, params.order);
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  double const total = best + std::pow(params.cutoff, params.order) * static_cast<double>(n - m);
  return std::pow(total / static_cast<double>(n), 1.0 / params.order);
}

}  // namespace

WeightedDensities random_labeled_instance(std::mt19937_64& rng)
{
  auto space = std::make_shared<DiscreteSpace>();
  std::size_t const cells = pick(rng, 2, 4);
  std::size_t const labels = pick(rng, 1, 3);
  for (std::size_t c = 0; c < cells; ++c)
  {
    space->cells.push_back(Eigen::VectorXd::Constant(1, static_cast<double>(c)));
    space->measures.push_back(uniform(rng, 0.5, 1.5));
  }
  for (std::size_t l = 0; l < labels; ++l)
    space->labels.push_back(Label{static_cast<std::uint32_t>(pick(rng, 1, 3)), static_cast<std::uint32_t>(10 + l)});
  space->max_cardinality = std::min<std::size_t>(labels, pick(rng, 1, 3));
  SpacePtr const shared = space;

  std::size_t const sensors = pick(rng, 2, 3);
  std::vector<double> weights(sensors);
  for (auto& w : weights)
    w = uniform(rng, 0.1, 1.0);
  double const total = std::accumulate(weights.begin(), weights.end(), 0.0);

  WeightedDensities out;
  for (std::size_t s = 0; s < sensors; ++s)
  {
    std::vector<DiscreteHypothesis> hyps;
    hyps.push_back({{}, uniform(rng, 0.02, 1.0), {}});
    std::size_t const extra = pick(rng, 1, 4);
    for (std::size_t h = 0; h < extra; ++h)
    {
      DiscreteHypothesis hyp;
      hyp.members = random_subset(rng, labels, pick(rng, 1, space->max_cardinality));
      hyp.weight = uniform(rng, 0.0, 1.0);
      for (auto m : hyp.members)
        hyp.densities[m] = random_cell_density(rng, *space);
      hyps.push_back(std::move(hyp));
    }
    double const wsum =
        std::accumulate(hyps.begin(), hyps.end(), 0.0, [](double a, auto const& h) { return a + h.weight; });
    for (auto& h : hyps)
      h.weight /= wsum;
    out.emplace_back(discrete_glmb(shared, hyps), weights[s] / total);
  }
  return out;
}

MbDensity random_mb(std::mt19937_64& rng, std::size_t max_components, Eigen::Index dim)
{
  MbDensity m;
  std::size_t const n = pick(rng, 1, std::max<std::size_t>(1, max_components));
  for (std::size_t i = 0; i < n; ++i)
    m.components.push_back({i, uniform(rng, 0.05, 0.95), random_mixture(rng, dim, 10.0)});
  return m;
}

GmbDensity random_gmb(std::mt19937_64& rng, std::size_t indices, Eigen::Index dim)
{
  GmbDensity g;
  g.index_space.resize(indices);
  std::iota(g.index_space.begin(), g.index_space.end(), 0);
  std::size_t const tags = pick(rng, 1, 3);
  for (std::size_t t = 0; t < tags; ++t)
    for (auto i : g.index_space)
      g.density_sets[t][i] = make_density(random_mixture(rng, dim, 10.0));
  std::size_t const hyps = pick(rng, 2, 6);
  double total = 0.0;
  for (std::size_t h = 0; h < hyps; ++h)
  {
    GmbHypothesis hyp;
    hyp.indices = random_subset(rng, indices, pick(rng, 0, indices));
    hyp.tag = pick(rng, 0, tags - 1);
    hyp.weight = uniform(rng, 0.01, 1.0);
    total += hyp.weight;
    g.hypotheses.push_back(std::move(hyp));
  }
  for (auto& h : g.hypotheses)
    h.weight /= total;
  return g;
}

SuiteResult yes_probability_identity_suite(std::size_t instances, std::uint64_t seed)
{
  SuiteResult r{"yes-object probability identity", 0, 0, 0.0, 1e-9, ""};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < instances; ++i, ++r.instances)
  {
    auto const rep = label_inconsistency_indicator(random_labeled_instance(rng));
    double const residual = rep.d_G_infinite ? std::numeric_limits<double>::infinity() : corollary2_check(rep);
    r.worst = std::max(r.worst, residual);
    if (!(residual < r.tolerance))
      ++r.failures;
  }
  return finish(r);
}

SuiteResult divergence_decomposition_suite(std::size_t instances, std::uint64_t seed)
{
  SuiteResult r{"divergence decomposition", 0, 0, 0.0, 1e-9, ""};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < instances; ++i, ++r.instances)
  {
    auto const rep = label_inconsistency_indicator(random_labeled_instance(rng));
    double const residual = rep.G_labeled_infinite || rep.d_G_infinite ? std::numeric_limits<double>::infinity()
                                                                         : rep.identity_residual;
    r.worst = std::max(r.worst, residual);
    if (!(residual < r.tolerance))
      ++r.failures;
  }
  return finish(r);
}

SuiteResult divergence_bounds_suite(std::size_t instances, std::uint64_t seed)
{
  // Rounding slack only: both bounds are exact identities of the enumerated sums.
  SuiteResult r{"label inconsistency bounds", 0, 0, 0.0, 1e-12, ""};
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < instances; ++i, ++r.instances)
  {
    auto const rep = label_inconsistency_indicator(random_labeled_instance(rng));
    double violation = 0.0;
    if (rep.d_G_infinite || rep.d_G_upper_infinite)
      violation = std::numeric_limits<double>::infinity();
    else
      violation = std::max({0.0, -rep.d_G, rep.d_G - rep.d_G_upper});
    r.worst = std::max(r.worst, violation);
    if (violation > r.tolerance)
      ++r.failures;
  }
  return finish(r);
}

SuiteResult yes_probability_threshold_suite()
{
  SuiteResult r{"yes-object probability threshold", 2, 0, 0.0, 1e-6, ""};
  double const expected = std::log(500.0);
  double const closed = yes_probability_threshold(0.999, 0.5);
  double const bisect = yes_probability_threshold_bisection(0.999, 0.5);
  r.worst = std::max(std::abs(closed - expected), std::abs(bisect - expected));
  r.failures = (std::abs(closed - expected) > r.tolerance) + (std::abs(bisect - expected) > r.tolerance);
  r = finish(r);
  r.detail += fmt::format("; closed form {:.9f}, bisection {:.9f}", closed, bisect);
  return r;
}

SuiteResult fusion_oracle_suite(std::size_t instances, std::uint64_t seed)
{
  SuiteResult r{"fusion pipeline vs exact discrete GCI", 0, 0, 0.0, 1e-3, ""};
  std::mt19937_64 rng(seed);
  double const slots[] = {-40.0, 0.0, 40.0};
  auto space = std::make_shared<DiscreteSpace const>(DiscreteSpace::grid(
      Eigen::VectorXd::Constant(1, -60.0), Eigen::VectorXd::Constant(1, 60.0), {600}, 2));
  auto make = [&](std::size_t n) {
    MbDensity m;
    auto const where = random_subset(rng, 3, n);
    for (std::size_t i = 0; i < n; ++i)
    {
      double const sd = uniform(rng, 1.0, 2.0);
      Gaussiand g(Eigen::VectorXd::Constant(1, slots[where[i]] + uniform(rng, -1.5, 1.5)),
                  Eigen::MatrixXd::Constant(1, 1, sd * sd));
      m.components.push_back({i, uniform(rng, 0.1, 0.95), GaussianMixtured(g)});
    }
    return m;
  };
  for (std::size_t i = 0; i < instances; ++i, ++r.instances)
  {
    MbDensity const m1 = make(pick(rng, 1, 2));
    MbDensity const m2 = make(pick(rng, 1, 2));
    double const w1 = uniform(rng, 0.3, 0.7);
    FusionConfig cfg;
    cfg.weights = {w1, 1.0 - w1};
    GmbDensity const fused = gci_fuse_gmb_pair(mb_to_gmb(m1), mb_to_gmb(m2), cfg);
    auto const exact = gci_fuse_discrete({{discretize(m1, space), w1}, {discretize(m2, space), 1.0 - w1}});
    double const tv = total_variation(discretize(fused, space), exact);
    r.worst = std::max(r.worst, tv);
    if (!(tv < r.tolerance))
      ++r.failures;
  }
  return finish(r);
}

SuiteResult moment_preservation_suite(std::size_t instances, std::uint64_t seed)
{
  // Tolerances: 1e-9 for the moment match, 1e-12 for the parameter-transporting relabeling.
  SuiteResult r{"first-moment and cardinality preservation", 0, 0, 0.0, 1e-9, ""};
  double worst_match = 0.0;
  double worst_relabel = 0.0;
  std::size_t cardinality_mismatches = 0;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < instances; ++i, ++r.instances)
  {
    Eigen::Index const dim = static_cast<Eigen::Index>(pick(rng, 1, 2));
    GmbDensity const g = random_gmb(rng, pick(rng, 1, 3), dim);
    GaussianMixtured const v_in = phd(g);
    GaussianMixtured const v_mb = phd(gmb_to_mb_moment_match(g));

    MbDensity const m1 = random_mb(rng, 3, dim);
    MbDensity const m2 = random_mb(rng, 3, dim);
    FusionConfig cfg;
    cfg.weights = {0.5, 0.5};
    GmbDensity const fused = gci_fuse_mb_pair(m1, 0.5, m2, 0.5, cfg);
    std::vector<Label> labels;
    for (std::size_t k = 0; k < m1.components.size(); ++k)
      labels.push_back(Label{7, static_cast<std::uint32_t>(k + 1)});
    GlmbDensity const labeled = construct_labeled_fused(fused, labels);
    if (cardinality_distribution(labeled) != cardinality_distribution(fused))
      ++cardinality_mismatches;
    GaussianMixtured const v_fused = phd(fused);
    GaussianMixtured const v_labeled = phd(labeled);

    for (int p = 0; p < 200; ++p)
    {
      Eigen::VectorXd x(dim);
      for (Eigen::Index d = 0; d < dim; ++d)
        x(d) = uniform(rng, -15.0, 15.0);
      worst_match = std::max(worst_match, std::abs(v_in.density(x) - v_mb.density(x)));
      worst_relabel = std::max(worst_relabel, std::abs(v_fused.density(x) - v_labeled.density(x)));
    }
  }
  r.worst = worst_match;
  r.failures = (worst_match > 1e-9) + (worst_relabel > 1e-12) + cardinality_mismatches;
  r = finish(r);
  r.detail += fmt::format("; relabeling PHD worst {:.3e} (tolerance 1e-12), cardinality mismatches {}",
                          worst_relabel, cardinality_mismatches);
  return r;
}

SuiteResult ospa_oracle_suite(std::size_t pairs, std::uint64_t seed)
{
  SuiteResult r{"OSPA assignment vs permutation enumeration", 0, 0, 0.0, 1e-12, ""};
  std::mt19937_64 rng(seed);
  auto random_set = [&](std::size_t n) {
    std::vector<Eigen::VectorXd> s;
    for (std::size_t i = 0; i < n; ++i)
    {
      Eigen::VectorXd x(4);
      x << uniform(rng, -150, 150), uniform(rng, -150, 150), uniform(rng, -5, 5), uniform(rng, -5, 5);
      s.push_back(x);
    }
    return s;
  };
  for (std::size_t i = 0; i < pairs; ++i, ++r.instances)
  {
    auto const X = random_set(pick(rng, 0, 6));
    auto const Y = random_set(pick(rng, 0, 6));
    OspaParams params{uniform(rng, 20.0, 150.0), static_cast<double>(pick(rng, 1, 3))};
    double const err = std::abs(ospa_distance(X, Y, params) - brute_force_ospa(X, Y, params));
    r.worst = std::max(r.worst, err);
    if (!(err <= r.tolerance))
      ++r.failures;
  }
  return finish(r);
}

std::vector<SuiteResult> run_all_suites(std::uint64_t seed, double scale)
{
  auto n = [&](std::size_t base) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(base * scale))); };
  return {yes_probability_identity_suite(n(200), seed),
          divergence_decomposition_suite(n(200), seed + 1),
          divergence_bounds_suite(n(1000), seed + 2),
          yes_probability_threshold_suite(),
          fusion_oracle_suite(n(20), seed + 3),
          moment_preservation_suite(n(100), seed + 4),
          ospa_oracle_suite(n(500), seed + 5)};
}

}  // namespace rfs
