#pragma once

#include "rfs/labeled_rfs.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace rfs
{

using AnyDensity = std::variant<LmbDensity, MbDensity, GlmbDensity, GmbDensity>;

/// Kind tag written in the "kind" field: "lmb", "mb", "glmb" or "gmb".
std::string kind_of(AnyDensity const& d);

nlohmann::json to_json(GaussianMixtured const& gm);
nlohmann::json to_json(AnyDensity const& d);

/// Parses and validates a density; unknown keys and malformed fields raise SchemaError.
GaussianMixtured mixture_from_json(nlohmann::json const& j);
AnyDensity density_from_json(nlohmann::json const& j);

AnyDensity load_density(std::filesystem::path const& path);
void save_density(std::filesystem::path const& path, AnyDensity const& d);

/// State sets for OSPA: {"kind": "states", "states": [[x, y, ...], ...]}.
std::vector<Eigen::VectorXd> load_states(std::filesystem::path const& path);

/// Reads a JSON document, reporting parse errors with the file name and position.
nlohmann::json read_json(std::filesystem::path const& path);

}  // namespace rfs
