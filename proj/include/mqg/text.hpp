#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mqg::text {

// Literal special tokens that survive tokenization as single units.
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kCls = "[CLS]";
inline constexpr std::string_view kImp = "[IMP]";

struct Token {
  std::string text;   // lowercased surface form
  std::size_t begin;  // byte offset into the source string
  std::size_t end;    // one past the last byte
};

/// Lowercases and splits on whitespace and punctuation boundaries. Every ASCII
/// punctuation character becomes its own token, except inside the bracketed
/// special-token literals above. Non-ASCII bytes are treated as word characters.
std::vector<Token> tokenize_with_offsets(std::string_view s);
std::vector<std::string> tokenize(std::string_view s);

/// Lowercase + whitespace split, no punctuation separation.
std::vector<std::string> whitespace_tokens(std::string_view s);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);

/// Surface normalization used for duplicate detection: lowercase, collapse
/// internal whitespace, strip terminal punctuation.
std::string normalize_question(std::string_view s);

/// Case-insensitive, whitespace-collapsed search of `needle` in `haystack`.
/// Returns the byte range of the match in the original haystack.
std::optional<std::pair<std::size_t, std::size_t>> locate(std::string_view haystack,
                                                          std::string_view needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace mqg::text
