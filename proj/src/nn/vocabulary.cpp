#include "mqg/nn/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg::nn {

Vocabulary::Vocabulary() {
  for (const char* s : {"<pad>", "<s>", "</s>", "<unk>"}) add(s);
  add(std::string(text::kSep));
  add(std::string(text::kCls));
  add(std::string(text::kImp));
}

void Vocabulary::add(const std::string& token) {
  if (index_.contains(token)) return;
  index_.emplace(token, static_cast<std::int64_t>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (auto& tok : text::tokenize(t)) ++counts[tok];
  }
  Vocabulary v;
  for (const auto& [tok, c] : counts) {
    if (c >= min_count) v.add(tok);
  }
  return v;
}

std::int64_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::int64_t> Vocabulary::encode(std::string_view s) const {
  return encode_tokens(text::tokenize(s));
}

std::vector<std::int64_t> Vocabulary::encode_tokens(const std::vector<std::string>& tokens) const {
  std::vector<std::int64_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(std::span<const std::int64_t> ids) const {
  std::vector<std::string> toks;
  for (auto id : ids) {
    if (id == kEos) break;
    if (id < kNumSpecial && id != kUnk) continue;
    toks.push_back(token(id));
  }
  return detokenize(toks);
}

nlohmann::json Vocabulary::to_json() const { return {{"tokens", tokens_}}; }

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  Vocabulary v;
  const auto tokens = j.at("tokens").get<std::vector<std::string>>();
  if (tokens.size() < static_cast<std::size_t>(kNumSpecial) ||
      !std::equal(v.tokens_.begin(), v.tokens_.end(), tokens.begin())) {
    throw Error("vocabulary file does not start with the reserved special tokens");
  }
  for (const auto& t : tokens) v.add(t);
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot write vocabulary " + path.string());
  os << to_json().dump() << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read vocabulary " + path.string());
  return from_json(nlohmann::json::parse(is));
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  bool glue = true;
  for (const auto& t : tokens) {
    const bool closing = t.size() == 1 && std::string_view(".,?!;:)'").find(t[0]) != std::string_view::npos;
    if (!glue && !closing) out.push_back(' ');
    out += t;
    glue = t == "'" || t == "(";
  }
  return out;
}

}  // namespace mqg::nn
