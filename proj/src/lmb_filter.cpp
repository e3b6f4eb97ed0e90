#include "rfs/lmb_filter.hpp"

#include "rfs/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rfs
{

MotionModel MotionModel::constant_velocity(double dt, double sigma_v, double p_survival)
{
  MotionModel m;
  Eigen::Matrix2d const I = Eigen::Matrix2d::Identity();
  m.F = Eigen::MatrixXd::Identity(4, 4);
  m.F.topRightCorner(2, 2) = dt * I;
  double const q = sigma_v * sigma_v;
  m.Q.resize(4, 4);
  m.Q << std::pow(dt, 4) / 4 * I, std::pow(dt, 3) / 2 * I, std::pow(dt, 3) / 2 * I, dt * dt * I;
  m.Q *= q;
  m.p_survival = p_survival;
  return m;
}

SensorModel SensorModel::position_sensor(double sigma, double p_detect, double clutter_rate, double region_area)
{
  SensorModel s;
  s.H = Eigen::MatrixXd::Zero(2, 4);
  s.H.leftCols(2) = Eigen::Matrix2d::Identity();
  s.R = sigma * sigma * Eigen::MatrixXd::Identity(2, 2);
  s.p_detect = p_detect;
  s.clutter_rate = clutter_rate;
  s.clutter_density = region_area > 0 ? clutter_rate / region_area : 0.0;
  return s;
}

LmbDensity lmb_predict(LmbDensity const& posterior, MotionModel const& motion,
                       std::vector<BernoulliComponent> const& births)
{
  if (!(motion.p_survival >= 0 && motion.p_survival <= 1))
    throw std::domain_error("lmb_predict: survival probability outside [0,1]");
  std::vector<BernoulliComponent> out;
  out.reserve(posterior.components.size() + births.size());
  for (auto const& c : posterior.components)
  {
    GaussianMixtured p;
    for (auto const& g : c.p)
      p.add(g.weight, kalman_predict(g.gaussian, motion.F, motion.Q));
    out.push_back({c.label, motion.p_survival * c.r, std::move(p)});
  }
  for (auto const& b : births)
  {
    if (posterior.find(b.label))
      throw LabelCollisionError("lmb_predict: birth label " + to_string(b.label) + " already in use");
    out.push_back(b);
  }
  return make_lmb(std::move(out));
}

namespace
{

struct PairUpdate
{
  double log_q = -std::numeric_limits<double>::infinity();  ///< log of the measurement likelihood
  DensityPtr posterior;                                       ///< updated mixture (normalized)
};

int find_root(std::vector<int>& parent, int x)
{
  while (parent[x] != x)
  {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

double log_or_forbidden(double x)
{
  return x > 0 ? -std::log(x) : kForbiddenCost;
}

}  // namespace

LmbUpdateResult lmb_update(LmbDensity const& predicted, std::vector<Eigen::VectorXd> const& Z,
                           SensorModel const& sensor, UpdateOptions const& options)
{
  double const pd = sensor.p_detect;
  if (!(pd >= 0 && pd <= 1))
    throw std::domain_error("lmb_update: detection probability outside [0,1]");
  auto const n = predicted.components.size();
  auto const m = Z.size();
  // A zero clutter intensity is replaced by a tiny one; the assignment costs
  // only shift by a constant per detection, which the normalization removes.
  double const log_kappa = std::log(std::max(sensor.clutter_density, 1e-300));

  // Likelihoods and updated mixtures for gated track/measurement pairs.
  std::vector<std::vector<PairUpdate>> pairs(n, std::vector<PairUpdate>(m));
  std::vector<int> parent(n + m);
  std::iota(parent.begin(), parent.end(), 0);
  if (pd > 0)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      auto const& track = predicted.components[i];
      for (std::size_t j = 0; j < m; ++j)
      {
        bool gated = false;
        std::vector<double> log_w;
        std::vector<Gaussiand> updated;
        for (auto const& g : track.p)
        {
          auto u = kalman_update(g.gaussian, Z[j], sensor.H, sensor.R);
          Eigen::VectorXd const nu = Z[j] - sensor.H * g.gaussian.mean();
          Eigen::MatrixXd const S = sensor.H * g.gaussian.covariance() * sensor.H.transpose() + sensor.R;
          if (nu.dot(S.ldlt().solve(nu)) <= options.gate)
            gated = true;
          log_w.push_back(std::log(g.weight) + u.log_likelihood);
          updated.push_back(std::move(u.gaussian));
        }
        if (!gated)
          continue;
        double const log_q = detail::log_sum_exp(log_w);
        if (!std::isfinite(log_q))
          continue;
        // Associations weaker than the hypothesis floor relative to a miss never survive the ranking.
        double const miss = 1.0 - track.r * pd;
        if (track.r * pd > 0 && miss > 0 &&
            std::log(track.r * pd) + log_q - log_kappa - std::log(miss) < std::log(options.hypothesis_floor))
          continue;
        GaussianMixtured post;
        for (std::size_t c = 0; c < updated.size(); ++c)
          post.add(std::exp(log_w[c] - log_q), std::move(updated[c]));
        pairs[i][j] = {log_q, make_density(std::move(post))};
        parent[find_root(parent, static_cast<int>(i))] = find_root(parent, static_cast<int>(n + j));
      }
    }
  }

  // Gather clusters of tracks (with their gated measurements).
  std::map<int, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> clusters;
  for (std::size_t i = 0; i < n; ++i)
    clusters[find_root(parent, static_cast<int>(i))].first.push_back(i);
  for (std::size_t j = 0; j < m; ++j)
  {
    auto it = clusters.find(find_root(parent, static_cast<int>(n + j)));
    if (it != clusters.end())
      it->second.second.push_back(j);
  }

  LmbUpdateResult result;
  result.assoc_prob.assign(m, 0.0);
  std::vector<BernoulliComponent> out;
  out.reserve(n);
  double const log_kappa_cost = log_kappa;

  for (auto const& [root, members] : clusters)
  {
    auto const& [tracks, meas] = members;
    auto const nt = tracks.size();
    auto const nm = meas.size();

    // Rows: tracks. Columns: gated measurements, then one "not detected" column per track.
    Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(nt),
                                                     static_cast<Eigen::Index>(nm + nt), kForbiddenCost);
    std::vector<double> miss_exist(nt);  // P(exists | not detected)
    for (std::size_t a = 0; a < nt; ++a)
    {
      double const r = predicted.components[tracks[a]].r;
      double const miss = 1.0 - r * pd;
      miss_exist[a] = miss > 0 ? r * (1.0 - pd) / miss : 0.0;
      cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(nm + a)) = -std::log(std::max(miss, 1e-300));
      for (std::size_t b = 0; b < nm; ++b)
      {
        auto const& pu = pairs[tracks[a]][meas[b]];
        if (!pu.posterior)
          continue;
        double const c = log_or_forbidden(r * pd);
        if (std::isfinite(c))
          cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = c - pu.log_q + log_kappa_cost;
      }
    }

    auto const ranked = k_best_assignments(cost, options.max_hypotheses, -std::log(options.hypothesis_floor));
    if (ranked.empty())
      throw std::logic_error("lmb_update: no feasible association (miss column is always available)");
    std::vector<double> log_w;
    for (auto const& h : ranked)
      log_w.push_back(-h.cost);
    double const log_total = detail::log_sum_exp(log_w);

    std::vector<double> r_post(nt, 0.0);
    std::vector<std::vector<std::pair<double, DensityPtr>>> terms(nt);
    std::vector<DensityPtr> prior_density(nt);
    for (std::size_t a = 0; a < nt; ++a)
      prior_density[a] = make_density(predicted.components[tracks[a]].p);

    for (std::size_t h = 0; h < ranked.size(); ++h)
    {
      double const w = std::exp(log_w[h] - log_total);
      for (std::size_t a = 0; a < nt; ++a)
      {
        auto const col = static_cast<std::size_t>(ranked[h].row_to_col[a]);
        if (col < nm)
        {
          r_post[a] += w;
          terms[a].emplace_back(w, pairs[tracks[a]][meas[col]].posterior);
          result.assoc_prob[meas[col]] += w;
        }
        else
        {
          r_post[a] += w * miss_exist[a];
          terms[a].emplace_back(w * miss_exist[a], prior_density[a]);
        }
      }
    }

    for (std::size_t a = 0; a < nt; ++a)
    {
      auto const& track = predicted.components[tracks[a]];
      GaussianMixtured p = r_post[a] > 0 ? blend(terms[a]) : track.p;
      p = prune_and_merge(p, options.gm_prune, options.gm_merge, options.gm_max_components);
      out.push_back({track.label, std::clamp(r_post[a], 0.0, 1.0), std::move(p)});
    }
  }

  for (auto& a : result.assoc_prob)
    a = std::clamp(a, 0.0, 1.0);
  result.posterior = make_lmb(std::move(out));
  return result;
}

std::vector<BernoulliComponent> prior_births(BirthModel const& model, std::uint32_t time)
{
  std::vector<BernoulliComponent> out;
  if (model.kind != BirthModel::Kind::prior)
    return out;
  for (std::size_t i = 0; i < model.prior.size(); ++i)
  {
    auto const& steps = model.prior[i].steps;
    if (steps.empty() || std::find(steps.begin(), steps.end(), time) != steps.end())
      out.push_back({Label{time, static_cast<std::uint32_t>(i + 1)}, model.prior[i].r, model.prior[i].p});
  }
  return out;
}

std::vector<BernoulliComponent> adaptive_birth(std::vector<Eigen::VectorXd> const& Z,
                                               std::vector<double> const& assoc_prob, BirthModel const& model,
                                               std::uint32_t next_time)
{
  if (model.kind != BirthModel::Kind::adaptive)
    throw std::invalid_argument("adaptive_birth: birth model is not adaptive");
  if (assoc_prob.size() != Z.size())
    throw DimensionMismatchError("adaptive_birth: one association probability per measurement required");
  double total = 0.0;
  for (double a : assoc_prob)
  {
    if (!(a >= 0 && a <= 1))
      throw std::domain_error("adaptive_birth: association probability outside [0,1]");
    total += 1.0 - a;
  }
  std::vector<BernoulliComponent> out;
  if (!(total > 0))
    return out;
  auto const dim = model.covariance.rows();
  for (std::size_t j = 0; j < Z.size(); ++j)
  {
    double const r = std::min(model.r_max, (1.0 - assoc_prob[j]) / total * model.expected_births);
    if (!(r > 0))
      continue;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    mean.head(Z[j].size()) = Z[j];
    out.push_back({Label{next_time, static_cast<std::uint32_t>(j + 1)}, r,
                   GaussianMixtured(Gaussiand(std::move(mean), model.covariance))});
  }
  return out;
}

LmbDensity lmb_truncate(LmbDensity const& l, double threshold)
{
  LmbDensity out;
  for (auto const& c : l.components)
    if (!(c.r < threshold))
      out.components.push_back(c);
  return out;
}

std::vector<Estimate> extract_estimates(LmbDensity const& l, double threshold)
{
  std::vector<Estimate> out;
  for (auto const& c : l.components)
    if (c.r > threshold && !c.p.empty())
      out.push_back({c.label, c.p.dominant().gaussian.mean()});
  return out;
}

LmbFilter::LmbFilter(MotionModel motion, SensorModel sensor, BirthModel birth, UpdateOptions options,
                     double truncation)
  : motion_(std::move(motion))
  , sensor_(std::move(sensor))
  , birth_(std::move(birth))
  , options_(options)
  , truncation_(truncation)
{
}

LmbDensity const& LmbFilter::step(std::uint32_t k, std::vector<Eigen::VectorXd> const& Z)
{
  auto births = birth_.kind == BirthModel::Kind::prior ? prior_births(birth_, k) : std::move(pending_births_);
  pending_births_.clear();
  auto predicted = lmb_predict(posterior_, motion_, births);
  auto updated = lmb_update(predicted, Z, sensor_, options_);
  posterior_ = lmb_truncate(updated.posterior, truncation_);
  if (birth_.kind == BirthModel::Kind::adaptive)
    pending_births_ = adaptive_birth(Z, updated.assoc_prob, birth_, k + 1);
  return posterior_;
}

}  // namespace rfs
