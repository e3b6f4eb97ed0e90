#include "rfs/serialization.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

namespace rfs
{

using nlohmann::json;

namespace
{

void require_keys(json const& j, std::set<std::string> const& required, std::set<std::string> const& optional,
                  std::string const& where)
{
  if (!j.is_object())
    throw SchemaError(where + ": expected an object");
  for (auto const& [key, value] : j.items())
    if (!required.contains(key) && !optional.contains(key))
      throw SchemaError(fmt::format("{}: unknown key '{}'", where, key));
  for (auto const& key : required)
    if (!j.contains(key))
      throw SchemaError(fmt::format("{}: missing key '{}'", where, key));
}

template <typename T>
T get(json const& j, std::string const& key, std::string const& where)
{
  try
  {
    return j.at(key).get<T>();
  }
  catch (json::exception const& e)
  {
    throw SchemaError(fmt::format("{}: field '{}': {}", where, key, e.what()));
  }
}

json vector_json(Eigen::VectorXd const& v)
{
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(json const& j, std::string const& where)
{
  if (!j.is_array())
    throw SchemaError(where + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
  {
    if (!j[i].is_number())
      throw SchemaError(where + ": expected an array of numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json label_json(Label const& l)
{
  return json::array({l.birth_time, l.index});
}

Label label_from(json const& j, std::string const& where)
{
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned())
    throw SchemaError(where + ": a label is [birth_time, index] with non-negative integers");
  return Label{j[0].get<std::uint32_t>(), j[1].get<std::uint32_t>()};
}

}  // namespace

std::string kind_of(AnyDensity const& d)
{
  static char const* const names[] = {"lmb", "mb", "glmb", "gmb"};
  return names[d.index()];
}

json to_json(GaussianMixtured const& gm)
{
  json out = json::array();
  for (auto const& c : gm)
  {
    json cov = json::array();
    for (Eigen::Index r = 0; r < c.gaussian.covariance().rows(); ++r)
      cov.push_back(vector_json(c.gaussian.covariance().row(r).transpose()));
    out.push_back({{"weight", c.weight}, {"mean", vector_json(c.gaussian.mean())}, {"covariance", cov}});
  }
  return out;
}

GaussianMixtured mixture_from_json(json const& j)
{
  if (!j.is_array() || j.empty())
    throw SchemaError("mixture: expected a non-empty array of components");
  GaussianMixtured gm;
  for (std::size_t k = 0; k < j.size(); ++k)
  {
    std::string const where = fmt::format("mixture component {}", k);
    require_keys(j[k], {"weight", "mean", "covariance"}, {}, where);
    Eigen::VectorXd mean = vector_from(j[k]["mean"], where + " mean");
    auto const& cj = j[k]["covariance"];
    if (!cj.is_array() || cj.size() != static_cast<std::size_t>(mean.size()))
      throw SchemaError(where + ": covariance must be a square matrix matching the mean");
    Eigen::MatrixXd cov(mean.size(), mean.size());
    for (std::size_t r = 0; r < cj.size(); ++r)
    {
      Eigen::VectorXd row = vector_from(cj[r], where + " covariance");
      if (row.size() != mean.size())
        throw SchemaError(where + ": covariance must be a square matrix matching the mean");
      cov.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    try
    {
      gm.add(get<double>(j[k], "weight", where), Gaussiand(std::move(mean), cov));
    }
    catch (std::exception const& e)
    {
      if (dynamic_cast<SchemaError const*>(&e))
        throw;
      throw SchemaError(where + ": " + e.what());
    }
  }
  return gm;
}

json to_json(AnyDensity const& d)
{
  json out;
  out["kind"] = kind_of(d);
  if (auto const* l = std::get_if<LmbDensity>(&d))
  {
    out["components"] = json::array();
    for (auto const& c : l->components)
      out["components"].push_back({{"label", label_json(c.label)}, {"r", c.r}, {"density", to_json(c.p)}});
  }
  else if (auto const* m = std::get_if<MbDensity>(&d))
  {
    out["components"] = json::array();
    for (auto const& c : m->components)
      out["components"].push_back({{"index", c.index}, {"r", c.r}, {"density", to_json(c.p)}});
  }
  else if (auto const* g = std::get_if<GlmbDensity>(&d))
  {
    out["label_space"] = json::array();
    for (auto const& l : g->label_space)
      out["label_space"].push_back(label_json(l));
    out["hypotheses"] = json::array();
    for (auto const& h : g->hypotheses)
    {
      json labels = json::array();
      for (auto const& l : h.labels)
        labels.push_back(label_json(l));
      out["hypotheses"].push_back({{"labels", labels}, {"component", h.component}, {"weight", h.weight}});
    }
    out["components"] = json::array();
    for (auto const& [c, densities] : g->components)
    {
      json ds = json::array();
      for (auto const& [l, p] : densities)
        ds.push_back({{"label", label_json(l)}, {"density", to_json(*p)}});
      out["components"].push_back({{"component", c}, {"densities", ds}});
    }
  }
  else if (auto const* gm = std::get_if<GmbDensity>(&d))
  {
    out["index_space"] = gm->index_space;
    out["hypotheses"] = json::array();
    for (auto const& h : gm->hypotheses)
      out["hypotheses"].push_back({{"indices", h.indices}, {"tag", h.tag}, {"weight", h.weight}});
    out["density_sets"] = json::array();
    for (auto const& [t, set] : gm->density_sets)
    {
      json ds = json::array();
      for (auto const& [i, p] : set)
        ds.push_back({{"index", i}, {"density", to_json(*p)}});
      out["density_sets"].push_back({{"tag", t}, {"densities", ds}});
    }
  }
  return out;
}

AnyDensity density_from_json(json const& j)
{
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw SchemaError("density: missing string field 'kind'");
  auto const kind = j["kind"].get<std::string>();
  if (kind == "lmb" || kind == "mb")
  {
    require_keys(j, {"kind", "components"}, {}, kind);
    std::vector<BernoulliComponent> lc;
    MbDensity mb;
    auto const& comps = j["components"];
    if (!comps.is_array())
      throw SchemaError(kind + ": 'components' must be an array");
    for (std::size_t k = 0; k < comps.size(); ++k)
    {
      std::string const where = fmt::format("{} component {}", kind, k);
      std::string const key = kind == "lmb" ? "label" : "index";
      require_keys(comps[k], {key, "r", "density"}, {}, where);
      double const r = get<double>(comps[k], "r", where);
      auto p = mixture_from_json(comps[k]["density"]);
      if (kind == "lmb")
        lc.push_back({label_from(comps[k]["label"], where), r, std::move(p)});
      else
        mb.components.push_back({get<std::size_t>(comps[k], "index", where), r, std::move(p)});
    }
    if (kind == "lmb")
    {
      LmbDensity l;
      try
      {
        l = make_lmb(std::move(lc));
      }
      catch (LabelCollisionError const& e)
      {
        throw SchemaError(std::string("lmb: ") + e.what());
      }
      validate(l);
      return l;
    }
    std::sort(mb.components.begin(), mb.components.end(),
              [](MbComponent const& a, MbComponent const& b) { return a.index < b.index; });
    validate(mb);
    return mb;
  }
  if (kind == "glmb")
  {
    require_keys(j, {"kind", "label_space", "hypotheses", "components"}, {}, kind);
    GlmbDensity g;
    for (auto const& l : j["label_space"])
      g.label_space.push_back(label_from(l, "glmb label_space"));
    for (std::size_t k = 0; k < j["hypotheses"].size(); ++k)
    {
      auto const& h = j["hypotheses"][k];
      std::string const where = fmt::format("glmb hypothesis {}", k);
      require_keys(h, {"labels", "component", "weight"}, {}, where);
      GlmbHypothesis gh;
      for (auto const& l : h["labels"])
        gh.labels.push_back(label_from(l, where));
      gh.component = get<std::size_t>(h, "component", where);
      gh.weight = get<double>(h, "weight", where);
      g.hypotheses.push_back(std::move(gh));
    }
    for (auto const& c : j["components"])
    {
      require_keys(c, {"component", "densities"}, {}, "glmb component");
      auto& comp = g.components[get<std::size_t>(c, "component", "glmb component")];
      for (auto const& d : c["densities"])
      {
        require_keys(d, {"label", "density"}, {}, "glmb component density");
        comp[label_from(d["label"], "glmb component density")] = make_density(mixture_from_json(d["density"]));
      }
    }
    validate(g);
    return g;
  }
  if (kind == "gmb")
  {
    require_keys(j, {"kind", "index_space", "hypotheses", "density_sets"}, {}, kind);
    GmbDensity g;
    g.index_space = get<std::vector<std::size_t>>(j, "index_space", kind);
    for (std::size_t k = 0; k < j["hypotheses"].size(); ++k)
    {
      auto const& h = j["hypotheses"][k];
      std::string const where = fmt::format("gmb hypothesis {}", k);
      require_keys(h, {"indices", "tag", "weight"}, {}, where);
      g.hypotheses.push_back({get<std::vector<std::size_t>>(h, "indices", where), get<std::size_t>(h, "tag", where),
                              get<double>(h, "weight", where)});
    }
    for (auto const& s : j["density_sets"])
    {
      require_keys(s, {"tag", "densities"}, {}, "gmb density set");
      auto& set = g.density_sets[get<std::size_t>(s, "tag", "gmb density set")];
      for (auto const& d : s["densities"])
      {
        require_keys(d, {"index", "density"}, {}, "gmb density");
        set[get<std::size_t>(d, "index", "gmb density")] = make_density(mixture_from_json(d["density"]));
      }
    }
    validate(g);
    return g;
  }
  throw SchemaError("density: unknown kind '" + kind + "'");
}

json read_json(std::filesystem::path const& path)
{
  std::ifstream in(path);
  if (!in)
    throw SchemaError("cannot open " + path.string());
  try
  {
    return json::parse(in);
  }
  catch (json::parse_error const& e)
  {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

AnyDensity load_density(std::filesystem::path const& path)
{
  try
  {
    return density_from_json(read_json(path));
  }
  catch (SchemaError const& e)
  {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void save_density(std::filesystem::path const& path, AnyDensity const& d)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << to_json(d).dump(2) << '\n';
}

std::vector<Eigen::VectorXd> load_states(std::filesystem::path const& path)
{
  auto const j = read_json(path);
  require_keys(j, {"kind", "states"}, {}, path.string());
  if (j["kind"] != "states")
    throw SchemaError(path.string() + ": kind must be 'states'");
  std::vector<Eigen::VectorXd> out;
  for (auto const& s : j["states"])
    out.push_back(vector_from(s, path.string() + " state"));
  return out;
}

}  // namespace rfs
