#include "mqg/config.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg {

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path.string());
}

RunConfig RunConfig::parse(std::string_view body, std::string_view name) {
  RunConfig cfg;
  std::istringstream is{std::string(body)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    auto sep = trimmed.find_first_of("=:");
    if (sep == std::string::npos) {
      throw Error(std::string(name) + ":" + std::to_string(n) + ": expected 'key = value'");
    }
    auto key = text::trim(trimmed.substr(0, sep));
    if (key.empty()) throw Error(std::string(name) + ":" + std::to_string(n) + ": empty key");
    cfg.values_[key] = text::trim(trimmed.substr(sep + 1));
  }
  return cfg;
}

std::string RunConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error("config key '" + key + "' is missing");
  return it->second;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const auto v = get_string(key);
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error("config key '" + key + "' is not a number: '" + v + "'");
}

long long RunConfig::get_int(const std::string& key) const {
  const auto v = get_string(key);
  try {
    std::size_t used = 0;
    long long i = std::stoll(v, &used);
    if (used == v.size()) return i;
  } catch (const std::exception&) {
  }
  throw Error("config key '" + key + "' is not an integer: '" + v + "'");
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& [k, v] : values_) {
    feed(k);
    feed(v);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command},         {"config_hash", config_hash}, {"config", config},
          {"inputs", inputs},           {"outputs", outputs},         {"seed", seed},
          {"started_at", started_at},   {"finished_at", finished_at}, {"versions", versions}};
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write manifest " + path.string());
  os << to_json().dump(2) << '\n';
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mqg
