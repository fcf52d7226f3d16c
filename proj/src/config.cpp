#include "dormancy/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dormancy/errors.hpp"

namespace dormancy {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Strips a trailing comment that is not inside a string literal.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool is_bare_key(std::string_view key) {
  return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

nlohmann::json parse_scalar(std::string_view raw, std::size_t line_no) {
  const auto fail = [&](const std::string& what) -> nlohmann::json {
    throw ConfigError("line " + std::to_string(line_no) + ": " + what + " '" + std::string(raw) + "'");
  };
  raw = trim(raw);
  if (raw.empty()) return fail("missing value");
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') return fail("unterminated string");
    return std::string(raw.substr(1, raw.size() - 2));
  }
  std::string digits;
  for (char c : raw)
    if (c != '_') digits.push_back(c);
  if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);

  std::int64_t integer = 0;
  auto [iend, iec] = std::from_chars(digits.data(), digits.data() + digits.size(), integer);
  if (iec == std::errc() && iend == digits.data() + digits.size()) return integer;

  double value = 0.0;
  auto [dend, dec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (dec != std::errc() || dend != digits.data() + digits.size()) return fail("cannot parse value");
  return value;
}

nlohmann::json parse_value(std::string_view raw, std::size_t line_no) {
  raw = trim(raw);
  if (!raw.empty() && raw.front() == '[') {
    if (raw.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": arrays must fit on one line");
    nlohmann::json arr = nlohmann::json::array();
    std::string_view body = trim(raw.substr(1, raw.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      arr.push_back(parse_scalar(body.substr(0, comma), line_no));
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
    }
    return arr;
  }
  return parse_scalar(raw, line_no);
}

bool is_param_key(std::string_view key) {
  return std::find(kParamKeys.begin(), kParamKeys.end(), key) != kParamKeys.end();
}

}  // namespace

nlohmann::json parse_flat_toml(std::string_view text) {
  nlohmann::json doc = nlohmann::json::object();
  nlohmann::json* table = &doc;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed table header");
      const std::string name(trim(body.substr(1, body.size() - 2)));
      if (!is_bare_key(name)) throw ConfigError("line " + std::to_string(line_no) + ": bad table name '" + name + "'");
      if (doc.contains(name)) throw ConfigError("duplicate table '" + name + "'");
      doc[name] = nlohmann::json::object();
      table = &doc[name];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(body.substr(0, eq)));
    if (!is_bare_key(key)) throw ConfigError("line " + std::to_string(line_no) + ": bad key '" + key + "'");
    if (table->contains(key)) throw ConfigError("duplicate key '" + key + "'");
    (*table)[key] = parse_value(body.substr(eq + 1), line_no);
  }
  return doc;
}

nlohmann::json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto ext = path.extension().string();
  if (ext == ".toml") return parse_flat_toml(buffer.str());
  if (ext == ".json") {
    try {
      return nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  throw ConfigError("config file must end in .toml or .json: " + path.string());
}

void apply_override(nlohmann::json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must look like key=value: " + std::string(assignment));
  const std::string key(trim(assignment.substr(0, eq)));
  const auto raw = trim(assignment.substr(eq + 1));
  const auto dot = key.find('.');
  nlohmann::json value;
  try {
    value = parse_value(raw, 0);
  } catch (const ConfigError&) {
    // experiment options may be bare words; model parameters must be numbers
    if (dot == std::string::npos || raw.empty()) throw ConfigError("override " + key + ": cannot parse value '" + std::string(raw) + "'");
    value = std::string(raw);
  }
  if (dot == std::string::npos) {
    doc[key] = value;
    return;
  }
  const std::string table = key.substr(0, dot);
  if (!doc.contains(table)) doc[table] = nlohmann::json::object();
  doc[table][key.substr(dot + 1)] = value;
}

RunConfig resolve_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a key-value table");
  for (const auto& [key, value] : doc.items()) {
    if (key == "_manifest") continue;
    if (key == "experiment") {
      if (!value.is_object()) throw ConfigError("'experiment' must be a table");
      continue;
    }
    if (!is_param_key(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig cfg;
  cfg.params = params_from_json(doc);
  cfg.warnings = validate(cfg.params);
  if (doc.contains("experiment")) cfg.experiment = doc["experiment"];
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  auto doc = read_config_document(path);
  for (const auto& o : overrides) apply_override(doc, o);
  return resolve_config(doc);
}

nlohmann::json to_json(const ModelParams& p) {
  nlohmann::json j = nlohmann::json::object();
  for (auto key : kParamKeys) j[std::string(key)] = param_value(p, key);
  return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  for (auto key : kParamKeys) {
    const std::string k(key);
    if (!j.contains(k)) throw ConfigError("missing required parameter '" + k + "'");
    if (!j[k].is_number()) throw ConfigError("parameter '" + k + "' must be a number");
    param_ref(p, key) = j[k].get<double>();
  }
  return p;
}

}  // namespace dormancy
