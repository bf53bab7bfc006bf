#include "mqg/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace mqg::text {
namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

constexpr std::array<std::string_view, 3> kSpecials = {kSep, kCls, kImp};

std::size_t special_at(std::string_view s, std::size_t i) {
  for (auto sp : kSpecials) {
    if (s.substr(i, sp.size()) == sp) return sp.size();
  }
  return 0;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (unsigned char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::vector<Token> tokenize_with_offsets(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (auto n = special_at(s, i); n > 0) {
      out.push_back({std::string(s.substr(i, n)), i, i + n});
      i += n;
      continue;
    }
    if (is_punct(c)) {
      out.push_back({std::string(1, static_cast<char>(c)), i, i + 1});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && !is_space(static_cast<unsigned char>(s[j])) &&
           !is_punct(static_cast<unsigned char>(s[j]))) {
      ++j;
    }
    out.push_back({to_lower(s.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(s)) out.push_back(std::move(t.text));
  return out;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(to_lower(s.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string normalize_question(std::string_view s) {
  std::string out = collapse_whitespace(to_lower(s));
  while (!out.empty() && (is_punct(static_cast<unsigned char>(out.back())) ||
                          is_space(static_cast<unsigned char>(out.back())))) {
    out.pop_back();
  }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> locate(std::string_view haystack,
                                                          std::string_view needle) {
  // Collapse the haystack while remembering where each kept byte came from.
  std::string flat;
  std::vector<std::size_t> origin;
  bool pending = false;
  for (std::size_t i = 0; i < haystack.size(); ++i) {
    auto c = static_cast<unsigned char>(haystack[i]);
    if (is_space(c)) {
      pending = !flat.empty();
      continue;
    }
    if (pending) {
      flat.push_back(' ');
      origin.push_back(i);
    }
    pending = false;
    flat.push_back(static_cast<char>(std::tolower(c)));
    origin.push_back(i);
  }
  const std::string probe = collapse_whitespace(to_lower(needle));
  if (probe.empty()) return std::nullopt;
  auto pos = flat.find(probe);
  if (pos == std::string::npos) return std::nullopt;
  return std::make_pair(origin[pos], origin[pos + probe.size() - 1] + 1);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace mqg::text
