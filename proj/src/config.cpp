#include "typelabel/config.hpp"

#include <fstream>
#include <vector>

namespace typelabel::pipeline {

using nlohmann::json;

namespace {

std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i <= key.size()) {
    std::size_t dot = key.find('.', i);
    if (dot == std::string::npos) dot = key.size();
    parts.push_back(key.substr(i, dot - i));
    i = dot + 1;
  }
  return parts;
}

void set_path(json& root, const std::string& key, json value) {
  json* node = &root;
  std::vector<std::string> parts = split_key(key);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) *node = json::object();
    node = &(*node)[parts[i]];
  }
  if (!node->is_object()) *node = json::object();
  (*node)[parts.back()] = std::move(value);
}

}  // namespace

Config Config::load(const std::filesystem::path& file, std::span<const std::string> overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in config file " + file.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object: " + file.string());

  for (const auto& ov : overrides) {
    std::size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override must look like key=value: " + ov);
    std::string key = ov.substr(0, eq);
    std::string value = ov.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = value;  // bare strings need no quoting
    }
    set_path(j, key, std::move(parsed));
  }
  return from_json(std::move(j), std::filesystem::absolute(file).parent_path());
}

Config Config::from_json(json j, std::filesystem::path base_dir) {
  Config cfg;
  cfg.raw_ = std::move(j);
  cfg.base_dir_ = std::move(base_dir);
  return cfg;
}

const json* Config::find(const std::string& key) const {
  const json* node = &raw_;
  for (const auto& part : split_key(key)) {
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &node->at(part);
  }
  return node;
}

void Config::record(const std::string& key, json value) const {
  set_path(resolved_, key, std::move(value));
}

json Config::get_json(const std::string& key, json fallback) const {
  const json* p = find(key);
  json v = p ? *p : std::move(fallback);
  record(key, v);
  return v;
}

std::filesystem::path Config::anchor(const std::string& value) const {
  std::filesystem::path p(value);
  if (p.is_relative() && !base_dir_.empty()) return base_dir_ / p;
  return p;
}

std::filesystem::path Config::path(const std::string& key) const {
  return anchor(require<std::string>(key));
}

std::filesystem::path Config::path(const std::string& key,
                                   const std::filesystem::path& fallback) const {
  const json* p = find(key);
  if (!p) {
    record(key, fallback.string());
    return fallback;
  }
  return anchor(require<std::string>(key));
}

void Config::write_resolved(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "resolved_config.json", resolved_.dump(2) + "\n");
}

}  // namespace typelabel::pipeline
