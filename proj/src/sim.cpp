#include "rfs/sim.hpp"

#include "rfs/diagnostics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace rfs
{

using nlohmann::json;

namespace
{

/// Strict reader for one JSON object: every key must be consumed, unknown keys are errors.
class ObjectReader
{
public:
  ObjectReader(json const& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object())
      throw SchemaError(path_ + ": expected an object");
  }

  [[nodiscard]] bool has(std::string const& key) const { return j_.contains(key); }

  json const& raw(std::string const& key)
  {
    if (!j_.contains(key))
      throw SchemaError(field(key) + ": missing required field");
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T required(std::string const& key)
  {
    return convert<T>(raw(key), field(key));
  }

  template <typename T>
  T optional(std::string const& key, T fallback)
  {
    if (!j_.contains(key))
      return fallback;
    return required<T>(key);
  }

  [[nodiscard]] std::string field(std::string const& key) const { return path_ + "." + key; }

  void finish() const
  {
    for (auto const& [key, value] : j_.items())
      if (!seen_.contains(key))
        throw SchemaError(fmt::format("{}: unknown field '{}'", path_, key));
  }

  template <typename T>
  static T convert(json const& v, std::string const& where)
  {
    try
    {
      if constexpr (std::is_same_v<T, double>)
      {
        if (!v.is_number())
          throw SchemaError(where + ": expected a number");
      }
      else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>)
      {
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0))
          throw SchemaError(where + ": expected a non-negative integer");
      }
      return v.get<T>();
    }
    catch (json::exception const& e)
    {
      throw SchemaError(fmt::format("{}: {}", where, e.what()));
    }
  }

private:
  json const& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Eigen::VectorXd vector_field(json const& j, std::string const& where, Eigen::Index expected = -1)
{
  if (!j.is_array())
    throw SchemaError(where + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = ObjectReader::convert<double>(j[i], fmt::format("{}[{}]", where, i));
  if (expected >= 0 && v.size() != expected)
    throw SchemaError(fmt::format("{}: expected {} entries", where, expected));
  return v;
}

void check_probability(double p, std::string const& where)
{
  if (!(p >= 0 && p <= 1))
    throw SchemaError(where + ": must lie in [0, 1]");
}

void check_positive(double v, std::string const& where)
{
  if (!(v > 0))
    throw SchemaError(where + ": must be positive");
}

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string num(double v)
{
  if (std::isnan(v))
    return "nan";
  return fmt::format("{:.9g}", v);
}

}  // namespace

std::string to_string(Estimator e)
{
  switch (e)
  {
    case Estimator::local:
      return "local";
    case Estimator::r_gci:
      return "r_gci";
    case Estimator::classical_gci:
      return "classical_gci";
  }
  return "unknown";
}

Estimator estimator_from_string(std::string const& s)
{
  if (s == "local")
    return Estimator::local;
  if (s == "r_gci")
    return Estimator::r_gci;
  if (s == "classical_gci")
    return Estimator::classical_gci;
  throw SchemaError("unknown estimator '" + s + "' (expected local, r_gci or classical_gci)");
}

double Scenario::region_area() const
{
  return (region_hi - region_lo).prod();
}

Scenario scenario_from_json(json const& j)
{
  Scenario sc;
  ObjectReader root(j, "scenario");
  sc.name = root.optional<std::string>("name", "scenario");

  auto const& region = root.raw("region");
  if (!region.is_array() || region.size() != 2)
    throw SchemaError("scenario.region: expected [[x_min, x_max], [y_min, y_max]]");
  for (int a = 0; a < 2; ++a)
  {
    auto const bounds = vector_field(region[a], fmt::format("scenario.region[{}]", a), 2);
    if (!(bounds(1) > bounds(0)))
      throw SchemaError(fmt::format("scenario.region[{}]: max must exceed min", a));
    sc.region_lo(a) = bounds(0);
    sc.region_hi(a) = bounds(1);
  }
  sc.duration = root.required<std::uint32_t>("duration");
  if (sc.duration < 1)
    throw SchemaError("scenario.duration: must be at least 1");
  sc.dt = root.optional<double>("dt", 1.0);
  check_positive(sc.dt, "scenario.dt");

  {
    ObjectReader m(root.raw("motion"), "scenario.motion");
    double const sigma_v = m.required<double>("sigma_v");
    double const ps = m.required<double>("p_survival");
    check_probability(ps, m.field("p_survival"));
    if (!(sigma_v >= 0))
      throw SchemaError(m.field("sigma_v") + ": must be non-negative");
    m.finish();
    sc.motion = MotionModel::constant_velocity(sc.dt, sigma_v, ps);
  }

  auto const& truth = root.raw("truth");
  if (!truth.is_array())
    throw SchemaError("scenario.truth: expected an array");
  for (std::size_t i = 0; i < truth.size(); ++i)
  {
    std::string const where = fmt::format("scenario.truth[{}]", i);
    ObjectReader t(truth[i], where);
    TruthTrack tt;
    tt.birth = t.required<std::uint32_t>("birth");
    tt.death = t.required<std::uint32_t>("death");
    tt.state = vector_field(t.raw("state"), t.field("state"), 4);
    t.finish();
    if (tt.birth < 1 || tt.death <= tt.birth)
      throw SchemaError(where + ": need 1 <= birth < death");
    if ((tt.state.head<2>().array() < sc.region_lo.array()).any() ||
        (tt.state.head<2>().array() > sc.region_hi.array()).any())
      throw SchemaError(where + ": initial position outside the region");
    sc.truth.push_back(std::move(tt));
  }

  double def_sigma = 25.0;
  double def_pd = 1.0;
  double def_clutter = 0.0;
  if (root.has("sensor_defaults"))
  {
    ObjectReader d(root.raw("sensor_defaults"), "scenario.sensor_defaults");
    def_sigma = d.optional<double>("sigma", def_sigma);
    def_pd = d.optional<double>("p_detect", def_pd);
    def_clutter = d.optional<double>("clutter_rate", def_clutter);
    d.finish();
  }
  auto const& sensors = root.raw("sensors");
  if (!sensors.is_array() || sensors.empty())
    throw SchemaError("scenario.sensors: expected a non-empty array");
  for (std::size_t s = 0; s < sensors.size(); ++s)
  {
    std::string const where = fmt::format("scenario.sensors[{}]", s);
    ObjectReader r(sensors[s], where);
    double const sigma = r.optional<double>("sigma", def_sigma);
    double const pd = r.optional<double>("p_detect", def_pd);
    double const clutter = r.optional<double>("clutter_rate", def_clutter);
    std::size_t const stream = r.optional<std::size_t>("stream", s);
    r.finish();
    check_positive(sigma, where + ".sigma");
    check_probability(pd, where + ".p_detect");
    if (!(clutter >= 0))
      throw SchemaError(where + ".clutter_rate: must be non-negative");
    sc.sensors.push_back({SensorModel::position_sensor(sigma, pd, clutter, sc.region_area()), stream});
  }

  {
    ObjectReader b(root.raw("birth"), "scenario.birth");
    auto const type = b.required<std::string>("type");
    if (type == "prior")
    {
      sc.birth.kind = BirthModel::Kind::prior;
      auto const& terms = b.raw("terms");
      if (!terms.is_array())
        throw SchemaError("scenario.birth.terms: expected an array");
      for (std::size_t i = 0; i < terms.size(); ++i)
      {
        std::string const where = fmt::format("scenario.birth.terms[{}]", i);
        ObjectReader t(terms[i], where);
        double const r = t.required<double>("r");
        check_probability(r, t.field("r"));
        Eigen::VectorXd mean = vector_field(t.raw("mean"), t.field("mean"), 4);
        Eigen::VectorXd diag = vector_field(t.raw("covariance_diag"), t.field("covariance_diag"), 4);
        auto steps = t.optional<std::vector<std::uint32_t>>("steps", {});
        t.finish();
        if ((diag.array() <= 0).any())
          throw SchemaError(where + ".covariance_diag: entries must be positive");
        sc.birth.prior.push_back(
            {r, GaussianMixtured(Gaussiand(std::move(mean), diag.asDiagonal().toDenseMatrix())), std::move(steps)});
      }
    }
    else if (type == "adaptive")
    {
      sc.birth.kind = BirthModel::Kind::adaptive;
      sc.birth.expected_births = b.required<double>("expected_births");
      sc.birth.r_max = b.required<double>("r_max");
      check_probability(sc.birth.r_max, b.field("r_max"));
      if (!(sc.birth.expected_births >= 0))
        throw SchemaError(b.field("expected_births") + ": must be non-negative");
      Eigen::VectorXd diag = vector_field(b.raw("covariance_diag"), b.field("covariance_diag"), 4);
      if ((diag.array() <= 0).any())
        throw SchemaError(b.field("covariance_diag") + ": entries must be positive");
      sc.birth.covariance = diag.asDiagonal().toDenseMatrix();
    }
    else
    {
      throw SchemaError("scenario.birth.type: expected 'prior' or 'adaptive'");
    }
    b.finish();
  }

  if (root.has("filter"))
  {
    ObjectReader f(root.raw("filter"), "scenario.filter");
    sc.truncation = f.optional<double>("truncation", sc.truncation);
    sc.update.gm_prune = f.optional<double>("gm_prune", sc.update.gm_prune);
    sc.update.gm_merge = f.optional<double>("gm_merge", sc.update.gm_merge);
    sc.update.gm_max_components = f.optional<std::size_t>("gm_max_components", sc.update.gm_max_components);
    sc.update.gate = f.optional<double>("gate", sc.update.gate);
    sc.update.max_hypotheses = f.optional<std::size_t>("max_hypotheses", sc.update.max_hypotheses);
    sc.update.hypothesis_floor = f.optional<double>("hypothesis_floor", sc.update.hypothesis_floor);
    sc.extraction_threshold = f.optional<double>("extraction_threshold", sc.extraction_threshold);
    f.finish();
    if (sc.update.gm_max_components < 1 || sc.update.max_hypotheses < 1)
      throw SchemaError("scenario.filter: component and hypothesis caps must be at least 1");
    if (!(sc.extraction_threshold > 0 && sc.extraction_threshold < 1))
      throw SchemaError("scenario.filter.extraction_threshold: must lie in (0, 1)");
    check_positive(sc.update.hypothesis_floor, "scenario.filter.hypothesis_floor");
  }

  sc.fusion.reduction = MixtureReduction{sc.update.gm_prune, sc.update.gm_merge, sc.update.gm_max_components};
  if (root.has("fusion"))
  {
    ObjectReader f(root.raw("fusion"), "scenario.fusion");
    sc.fusion.max_hypotheses = f.optional<std::size_t>("max_hypotheses", sc.fusion.max_hypotheses);
    sc.fusion.hypothesis_floor = f.optional<double>("hypothesis_floor", sc.fusion.hypothesis_floor);
    sc.fusion.eta_floor = f.optional<double>("eta_floor", sc.fusion.eta_floor);
    if (!f.optional<bool>("reduce", true))
      sc.fusion.reduction.reset();
    f.finish();
    check_positive(sc.fusion.hypothesis_floor, "scenario.fusion.hypothesis_floor");
    check_positive(sc.fusion.eta_floor, "scenario.fusion.eta_floor");
  }

  std::size_t const ns = sc.sensors.size();
  if (root.has("topology"))
  {
    auto const& topo = root.raw("topology");
    if (!topo.is_array() || topo.size() != ns)
      throw SchemaError("scenario.topology: expected one neighbour list per sensor");
    for (std::size_t s = 0; s < ns; ++s)
    {
      std::vector<std::size_t> nb;
      if (!topo[s].is_array())
        throw SchemaError(fmt::format("scenario.topology[{}]: expected an array", s));
      for (auto const& v : topo[s])
      {
        auto const n = ObjectReader::convert<std::size_t>(v, fmt::format("scenario.topology[{}]", s));
        if (n >= ns || n == s)
          throw SchemaError(fmt::format("scenario.topology[{}]: invalid neighbour {}", s, n));
        nb.push_back(n);
      }
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
      sc.topology.push_back(std::move(nb));
    }
  }
  else
  {
    sc.topology.resize(ns);
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t t = 0; t < ns; ++t)
        if (s != t)
          sc.topology[s].push_back(t);
  }
  for (std::size_t s = 0; s < ns; ++s)
    for (auto t : sc.topology[s])
      if (!std::binary_search(sc.topology[t].begin(), sc.topology[t].end(), s))
        throw SchemaError(fmt::format("scenario.topology: link {}-{} must be listed in both directions", s, t));
  {
    std::vector<char> seen(ns, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty())
    {
      auto const s = stack.back();
      stack.pop_back();
      for (auto t : sc.topology[s])
        if (!seen[t])
        {
          seen[t] = 1;
          stack.push_back(t);
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw SchemaError("scenario.topology: the sensor network must be connected");
  }

  if (root.has("estimators"))
  {
    for (auto const& e : root.raw("estimators"))
      sc.estimators.push_back(estimator_from_string(ObjectReader::convert<std::string>(e, "scenario.estimators")));
  }
  else
  {
    sc.estimators = {Estimator::local, Estimator::r_gci, Estimator::classical_gci};
  }

  if (root.has("ospa"))
  {
    ObjectReader o(root.raw("ospa"), "scenario.ospa");
    sc.ospa.cutoff = o.optional<double>("cutoff", sc.ospa.cutoff);
    sc.ospa.order = o.optional<double>("order", sc.ospa.order);
    o.finish();
    check_positive(sc.ospa.cutoff, "scenario.ospa.cutoff");
    if (!(sc.ospa.order >= 1))
      throw SchemaError("scenario.ospa.order: must be at least 1");
  }
  sc.settle_steps = root.optional<std::uint32_t>("settle_steps", sc.settle_steps);

  if (root.has("diagnostics"))
  {
    ObjectReader d(root.raw("diagnostics"), "scenario.diagnostics");
    sc.diagnostics.enabled = d.optional<bool>("enabled", false);
    sc.diagnostics.steps = d.optional<std::vector<std::uint32_t>>("steps", {});
    sc.diagnostics.min_existence = d.optional<double>("min_existence", sc.diagnostics.min_existence);
    sc.diagnostics.cells_per_axis = d.optional<std::size_t>("cells_per_axis", sc.diagnostics.cells_per_axis);
    sc.diagnostics.max_cardinality = d.optional<std::size_t>("max_cardinality", sc.diagnostics.max_cardinality);
    d.finish();
  }
  root.finish();
  return sc;
}

json apply_overrides(json config, std::vector<std::string> const& overrides)
{
  for (auto const& o : overrides)
  {
    auto const eq = o.find('=');
    if (eq == std::string::npos || eq == 0)
      throw SchemaError("override '" + o + "': expected key.path=value");
    std::string pointer;
    std::string const key = o.substr(0, eq);
    std::size_t start = 0;
    while (start <= key.size())
    {
      auto const dot = key.find('.', start);
      auto const part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (part.empty())
        throw SchemaError("override '" + o + "': empty path component");
      pointer += "/" + part;
      if (dot == std::string::npos)
        break;
      start = dot + 1;
    }
    std::string const text = o.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
      value = text;
    try
    {
      json::json_pointer const ptr(pointer);
      auto const parent = ptr.parent_pointer();
      if (!parent.empty() && !config.contains(parent))
        throw SchemaError("override '" + o + "': no such field");
      if (config.at(parent).is_array())
      {
        auto const& idx = ptr.back();
        if (idx.empty() || !std::all_of(idx.begin(), idx.end(), ::isdigit) ||
            std::stoul(idx) >= config.at(parent).size())
          throw SchemaError("override '" + o + "': array index out of range");
      }
      config[ptr] = value;
    }
    catch (json::exception const& e)
    {
      throw SchemaError("override '" + o + "': " + e.what());
    }
  }
  return config;
}

std::string config_hash(json const& config)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump())
  {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::mt19937_64 make_stream(std::uint64_t base_seed, std::uint64_t run, std::uint64_t stream, std::uint64_t step,
                            StreamPurpose purpose)
{
  std::uint64_t h = splitmix64(base_seed);
  for (std::uint64_t v : {run, stream, step, static_cast<std::uint64_t>(purpose)})
    h = splitmix64(h ^ v);
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

std::vector<std::vector<TruthObject>> generate_truth(Scenario const& sc)
{
  std::vector<std::vector<TruthObject>> out(sc.duration + 1);
  std::map<std::uint32_t, std::uint32_t> per_birth;
  for (auto const& t : sc.truth)
  {
    Label const label{t.birth, ++per_birth[t.birth]};
    Eigen::VectorXd x = t.state;
    for (std::uint32_t k = t.birth; k < t.death && k <= sc.duration; ++k)
    {
      out[k].push_back({label, x});
      x = sc.motion.F * x;
    }
  }
  return out;
}

std::vector<Eigen::VectorXd> generate_measurements(std::vector<TruthObject> const& truth, SensorModel const& sensor,
                                                   Eigen::Vector2d const& region_lo, Eigen::Vector2d const& region_hi,
                                                   std::mt19937_64& detection_rng, std::mt19937_64& clutter_rng)
{
  std::vector<Eigen::VectorXd> Z;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd const L = sensor.R.llt().matrixL();
  for (auto const& obj : truth)
  {
    if (!(unit(detection_rng) < sensor.p_detect))
      continue;
    Eigen::VectorXd noise(sensor.R.rows());
    for (Eigen::Index i = 0; i < noise.size(); ++i)
      noise(i) = normal(detection_rng);
    Z.push_back(sensor.H * obj.state + L * noise);
  }
  if (sensor.clutter_rate > 0)
  {
    std::poisson_distribution<int> count(sensor.clutter_rate);
    int const n = count(clutter_rng);
    for (int i = 0; i < n; ++i)
    {
      Eigen::VectorXd z(2);
      for (int a = 0; a < 2; ++a)
        z(a) = region_lo(a) + unit(clutter_rng) * (region_hi(a) - region_lo(a));
      Z.push_back(std::move(z));
    }
  }
  std::shuffle(Z.begin(), Z.end(), clutter_rng);
  return Z;
}

namespace
{

std::vector<Eigen::VectorXd> states_of(std::vector<Estimate> const& estimates)
{
  std::vector<Eigen::VectorXd> out;
  for (auto const& e : estimates)
    out.push_back(e.state);
  return out;
}

DiagnosticsRecord snapshot_diagnostics(Scenario const& sc, std::uint32_t step, LmbDensity const& a,
                                       LmbDensity const& b)
{
  DiagnosticsRecord rec{step, "", ""};
  try
  {
    auto keep = [&](LmbDensity const& l) {
      LmbDensity out;
      for (auto const& c : l.components)
        if (c.r >= sc.diagnostics.min_existence)
          out.components.push_back(c);
      return out;
    };
    auto const la = keep(a);
    auto const lb = keep(b);
    std::set<Label> labels;
    std::vector<GaussianMixtured> densities;
    for (auto const* l : {&la, &lb})
      for (auto const& c : l->components)
      {
        labels.insert(c.label);
        densities.push_back(c.p);
      }
    if (densities.empty())
    {
      rec.note = "no Bernoulli component above the existence floor";
      return rec;
    }
    std::size_t const max_card = std::min<std::size_t>(sc.diagnostics.max_cardinality, labels.size());
    auto space = std::make_shared<DiscreteSpace const>(
        covering_grid(densities, {0, 1}, 6.0, sc.diagnostics.cells_per_axis, max_card,
                      std::vector<Label>(labels.begin(), labels.end())));
    DiscretizeOptions opt;
    opt.coverage_tolerance = 1e-3;
    WeightedDensities ds{{discretize(la, space, opt), 0.5}, {discretize(lb, space, opt), 0.5}};
    rec.row = label_inconsistency_indicator(ds).csv_row(step);
  }
  catch (std::exception const& e)
  {
    rec.note = e.what();
  }
  return rec;
}

}  // namespace

RunRecord run_network(Scenario const& sc, std::uint64_t base_seed, std::size_t run)
{
  RunRecord rec;
  rec.run = run;
  rec.seed = base_seed;
  auto const truth = generate_truth(sc);
  std::size_t const ns = sc.sensors.size();

  std::vector<LmbFilter> filters;
  for (auto const& s : sc.sensors)
    filters.emplace_back(sc.motion, s.model, sc.birth, sc.update, sc.truncation);

  for (std::uint32_t k = 1; k <= sc.duration; ++k)
  {
    std::vector<Eigen::VectorXd> truth_states;
    for (auto const& t : truth[k])
      truth_states.push_back(t.state);

    std::map<std::size_t, std::vector<Eigen::VectorXd>> scans;
    std::vector<std::string> failure(ns);
    for (std::size_t s = 0; s < ns; ++s)
    {
      auto const stream = sc.sensors[s].stream;
      if (!scans.contains(stream))
      {
        auto det = make_stream(base_seed, run, stream, k, StreamPurpose::detection);
        auto clu = make_stream(base_seed, run, stream, k, StreamPurpose::clutter);
        scans[stream] =
            generate_measurements(truth[k], sc.sensors[s].model, sc.region_lo, sc.region_hi, det, clu);
      }
      try
      {
        filters[s].step(k, scans[stream]);
      }
      catch (std::exception const& e)
      {
        failure[s] = fmt::format("sensor {} filter: {}", s, e.what());
      }
    }

    for (std::size_t node = 0; node < ns; ++node)
    {
      std::vector<std::size_t> participants{node};
      participants.insert(participants.end(), sc.topology[node].begin(), sc.topology[node].end());
      std::string node_failure;
      for (auto p : participants)
        if (!failure[p].empty())
          node_failure = failure[p];

      for (auto est : sc.estimators)
      {
        StepRecord sr;
        sr.step = k;
        sr.sensor = node;
        sr.estimator = est;
        sr.card_true = truth_states.size();
        try
        {
          if (!node_failure.empty() && (est != Estimator::local || !failure[node].empty()))
            throw std::runtime_error(node_failure);
          std::vector<Estimate> estimates;
          if (est == Estimator::local || participants.size() == 1)
          {
            estimates = extract_estimates(filters[node].posterior(), sc.extraction_threshold);
          }
          else
          {
            std::vector<LmbDensity> locals;
            for (auto p : participants)
              locals.push_back(filters[p].posterior());
            FusionConfig cfg = sc.fusion;
            cfg.weights.assign(participants.size(), 1.0 / static_cast<double>(participants.size()));
            if (est == Estimator::r_gci)
              estimates = extract_estimates(glmb_to_lmb(r_gci_lmb_fuse(locals, cfg, 0)), sc.extraction_threshold);
            else
              estimates = extract_estimates(classical_gci_lmb_fuse(locals, cfg, 0), sc.extraction_threshold);
          }
          sr.card_est = estimates.size();
          sr.ospa = ospa_distance(states_of(estimates), truth_states, sc.ospa);
        }
        catch (std::exception const& e)
        {
          sr.error = e.what();
          sr.ospa = std::numeric_limits<double>::quiet_NaN();
        }
        rec.steps.push_back(std::move(sr));
      }
    }

    if (sc.diagnostics.enabled && ns >= 2 && !sc.topology[0].empty() &&
        std::find(sc.diagnostics.steps.begin(), sc.diagnostics.steps.end(), k) != sc.diagnostics.steps.end())
      rec.diagnostics.push_back(
          snapshot_diagnostics(sc, k, filters[0].posterior(), filters[sc.topology[0].front()].posterior()));
  }
  return rec;
}

std::vector<std::uint32_t> post_transient_steps(Scenario const& sc)
{
  std::set<std::uint32_t> events;
  for (auto const& t : sc.truth)
  {
    events.insert(t.birth);
    events.insert(t.death);
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t k = 1; k <= sc.duration; ++k)
  {
    bool transient = false;
    for (auto e : events)
      if (k >= e && k < e + sc.settle_steps)
        transient = true;
    if (!transient)
      out.push_back(k);
  }
  return out;
}

MonteCarloResult monte_carlo(Scenario const& sc, std::size_t runs, std::uint64_t base_seed, std::size_t jobs)
{
  if (runs < 1)
    throw std::invalid_argument("monte_carlo: runs must be at least 1");
  MonteCarloResult result;
  result.runs.resize(runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t r = next++; r < runs; r = next++)
    {
      try
      {
        result.runs[r] = run_network(sc, base_seed, r);
      }
      catch (...)
      {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
      }
    }
  };
  std::size_t const n_threads = std::max<std::size_t>(1, std::min(jobs, runs));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
  return result;
}

namespace
{

template <typename Value>
double mean_over(MonteCarloResult const& mc, Estimator e, std::size_t sensor, std::vector<std::uint32_t> const& steps,
                 Value value)
{
  std::set<std::uint32_t> const wanted(steps.begin(), steps.end());
  double sum = 0.0;
  std::size_t count = 0;
  for (auto const& run : mc.runs)
    for (auto const& s : run.steps)
      if (s.estimator == e && s.sensor == sensor && wanted.contains(s.step) && s.error.empty())
      {
        sum += value(s);
        ++count;
      }
  return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(count);
}

}  // namespace

double mean_ospa(MonteCarloResult const& mc, Estimator e, std::size_t sensor, std::vector<std::uint32_t> const& steps)
{
  return mean_over(mc, e, sensor, steps, [](StepRecord const& s) { return s.ospa; });
}

double mean_cardinality_error(MonteCarloResult const& mc, Estimator e, std::size_t sensor,
                              std::vector<std::uint32_t> const& steps)
{
  return mean_over(mc, e, sensor, steps, [](StepRecord const& s) {
    return std::abs(static_cast<double>(s.card_est) - static_cast<double>(s.card_true));
  });
}

void write_outputs(std::filesystem::path const& dir, Scenario const& sc, MonteCarloResult const& mc,
                   std::uint64_t seed, json const& config, std::vector<std::string> const& overrides)
{
  std::filesystem::create_directories(dir);
  auto open = [&](std::string const& name) {
    std::ofstream out(dir / name);
    if (!out)
      throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };

  std::size_t errors = 0;
  json error_samples = json::array();
  for (auto est : sc.estimators)
  {
    auto out = open(to_string(est) + ".csv");
    out << "run,step,sensor,card_true,card_est,ospa\n";
    for (auto const& run : mc.runs)
      for (auto const& s : run.steps)
      {
        if (s.estimator != est)
          continue;
        out << fmt::format("{},{},{},{},{},{}\n", run.run, s.step, s.sensor, s.card_true, s.card_est, num(s.ospa));
        if (!s.error.empty())
        {
          ++errors;
          if (error_samples.size() < 20)
            error_samples.push_back(fmt::format("run {} step {} sensor {} {}: {}", run.run, s.step, s.sensor,
                                                to_string(est), s.error));
        }
      }
  }

  {
    auto out = open("aggregate.csv");
    out << "estimator,step,sensor,card_true,mean_card,std_card,mean_ospa,std_ospa\n";
    for (auto est : sc.estimators)
      for (std::uint32_t k = 1; k <= sc.duration; ++k)
        for (std::size_t node = 0; node < sc.sensors.size(); ++node)
        {
          std::vector<double> card, ospa;
          std::size_t card_true = 0;
          for (auto const& run : mc.runs)
            for (auto const& s : run.steps)
              if (s.estimator == est && s.step == k && s.sensor == node)
              {
                card_true = s.card_true;
                if (s.error.empty())
                {
                  card.push_back(static_cast<double>(s.card_est));
                  ospa.push_back(s.ospa);
                }
              }
          auto stats = [](std::vector<double> const& v) {
            if (v.empty())
              return std::pair{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
            double const m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v)
              ss += (x - m) * (x - m);
            return std::pair{m, std::sqrt(ss / static_cast<double>(v.size()))};
          };
          auto const [mc_card, sd_card] = stats(card);
          auto const [mc_ospa, sd_ospa] = stats(ospa);
          out << fmt::format("{},{},{},{},{},{},{},{}\n", to_string(est), k, node, card_true, num(mc_card),
                             num(sd_card), num(mc_ospa), num(sd_ospa));
        }
  }

  if (sc.diagnostics.enabled)
  {
    auto out = open("diagnostics.csv");
    out << "run," << DiagnosticsReport::csv_header() << ",note\n";
    for (auto const& run : mc.runs)
      for (auto const& d : run.diagnostics)
      {
        if (!d.row.empty())
          out << run.run << ',' << d.row << ",\n";
        else
          out << fmt::format("{},{},,,,,,,\"{}\"\n", run.run, d.step, d.note);
      }
  }

  auto const window = post_transient_steps(sc);
  json summary = json::object();
  for (auto est : sc.estimators)
  {
    json per_node = json::object();
    for (std::size_t node = 0; node < sc.sensors.size(); ++node)
    {
      double const m = mean_ospa(mc, est, node, window);
      per_node[std::to_string(node)] = std::isnan(m) ? json(nullptr) : json(m);
    }
    summary[to_string(est)] = {{"post_transient_mean_ospa", per_node}};
  }

  json meta;
  meta["scenario"] = sc.name;
  meta["seed"] = seed;
  meta["runs"] = mc.runs.size();
  meta["config_hash"] = config_hash(config);
  meta["overrides"] = overrides;
  meta["windows"] = {{"settle_steps", sc.settle_steps}, {"post_transient_steps", window}};
  meta["estimators"] = json::array();
  for (auto est : sc.estimators)
    meta["estimators"].push_back(to_string(est));
  meta["summary"] = summary;
  meta["errors"] = errors;
  meta["error_samples"] = error_samples;
  auto out = open("metadata.json");
  out << meta.dump(2) << '\n';
}

}  // namespace rfs
