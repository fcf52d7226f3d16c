#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dormancy/model.hpp"

namespace dormancy {

/// Fully resolved input of one run: the model parameters plus the optional
/// `experiment` table, whose keys are interpreted by the consuming module.
struct RunConfig {
  ModelParams params;
  nlohmann::json experiment = nlohmann::json::object();
  std::vector<std::string> warnings;
};

/// Parses the flat TOML subset used by the presets: `key = value` lines with
/// numbers, quoted strings, booleans or one-line arrays, `#` comments and
/// single-level `[table]` headers.
nlohmann::json parse_flat_toml(std::string_view text);

/// Reads a JSON or TOML file (chosen by extension) into a json object.
nlohmann::json read_config_document(const std::filesystem::path& path);

/// Applies a `key=value` override. Keys may address the experiment table as
/// `experiment.key`.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Builds a RunConfig from a document. Every model key is required; unknown
/// keys throw ConfigError naming the key. A top-level `_manifest` entry is
/// ignored so that written manifests load back as configs.
RunConfig resolve_config(const nlohmann::json& doc);

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

nlohmann::json to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);

}  // namespace dormancy
