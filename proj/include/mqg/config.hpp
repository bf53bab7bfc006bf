#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mqg {

/// Flat key-value run configuration. Lines are `key = value` (or `key: value`);
/// `#` starts a comment. Later assignments win, so flag overrides are applied
/// by calling set() after loading.
class RunConfig {
 public:
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(std::string_view text, std::string_view name = "config");

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  void set_default(const std::string& key, std::string value) { values_.try_emplace(key, std::move(value)); }
  bool has(const std::string& key) const { return values_.contains(key); }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Stable 64-bit FNV-1a hash of the sorted key-value pairs, hex encoded.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::map<std::string, std::string> config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> versions;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string utc_timestamp();

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace mqg
