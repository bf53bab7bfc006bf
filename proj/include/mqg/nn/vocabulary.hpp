#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace mqg::nn {

/// Word-level vocabulary over text::tokenize tokens, with reserved ids for the
/// special symbols.
class Vocabulary {
 public:
  static constexpr std::int64_t kPad = 0;
  static constexpr std::int64_t kBos = 1;
  static constexpr std::int64_t kEos = 2;
  static constexpr std::int64_t kUnk = 3;
  static constexpr std::int64_t kSep = 4;
  static constexpr std::int64_t kCls = 5;
  static constexpr std::int64_t kImp = 6;
  static constexpr std::int64_t kNumSpecial = 7;

  Vocabulary();

  static Vocabulary build(const std::vector<std::string>& texts, std::size_t min_count = 1);

  std::int64_t id(const std::string& token) const;
  const std::string& token(std::int64_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }

  std::vector<std::int64_t> encode(std::string_view text) const;
  std::vector<std::int64_t> encode_tokens(const std::vector<std::string>& tokens) const;

  /// Stops at the first end-of-sequence id and skips other special ids.
  std::string decode(std::span<const std::int64_t> ids) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int64_t> index_;
};

/// Joins word tokens back into a readable sentence (no space before closing
/// punctuation, apostrophes glued to both neighbours).
std::string detokenize(const std::vector<std::string>& tokens);

}  // namespace mqg::nn
