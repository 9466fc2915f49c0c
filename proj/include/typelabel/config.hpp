#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"
#include "typelabel/util.hpp"

namespace typelabel::pipeline {

// JSON config with dotted-path lookups and --set overrides. Every value a
// stage reads (defaults included) is recorded, so the resolved config
// written next to the outputs reflects what actually ran. Relative paths
// resolve against the config file's directory.
class Config {
 public:
  static Config load(const std::filesystem::path& file,
                     std::span<const std::string> overrides = {});
  static Config from_json(nlohmann::json j, std::filesystem::path base_dir = {});

  bool has(const std::string& key) const { return find(key) != nullptr; }

  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    const nlohmann::json* p = find(key);
    T v = p ? cast<T>(*p, key) : fallback;
    record(key, nlohmann::json(v));
    return v;
  }

  template <typename T>
  T require(const std::string& key) const {
    const nlohmann::json* p = find(key);
    if (!p) throw ConfigError("missing config key: " + key);
    T v = cast<T>(*p, key);
    record(key, nlohmann::json(v));
    return v;
  }

  nlohmann::json get_json(const std::string& key, nlohmann::json fallback) const;

  // String value interpreted as a path; relative paths are anchored at the
  // config file's directory.
  std::filesystem::path path(const std::string& key) const;
  std::filesystem::path path(const std::string& key,
                             const std::filesystem::path& fallback) const;

  const nlohmann::json& raw() const { return raw_; }

  void write_resolved(const std::filesystem::path& out_dir) const;

 private:
  template <typename T>
  static T cast(const nlohmann::json& j, const std::string& key) {
    try {
      return j.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config key has wrong type: " + key);
    }
  }

  const nlohmann::json* find(const std::string& key) const;
  void record(const std::string& key, nlohmann::json value) const;
  std::filesystem::path anchor(const std::string& value) const;

  nlohmann::json raw_ = nlohmann::json::object();
  std::filesystem::path base_dir_;
  mutable nlohmann::json resolved_ = nlohmann::json::object();
};

}  // namespace typelabel::pipeline
