#include "mqg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kQuestionTypeNames = {
    "what", "when", "where", "which", "who", "why", "how", "other"};

std::string where(std::string_view name, std::size_t line) {
  return std::string(name) + ":" + std::to_string(line) + ": ";
}

const json& require(const json& rec, const char* key, std::string_view name, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw Error(where(name, line) + "missing field '" + key + "'");
  return *it;
}

std::string require_string(const json& rec, const char* key, std::string_view name,
                           std::size_t line) {
  const auto& v = require(rec, key, name, line);
  if (!v.is_string()) throw Error(where(name, line) + "field '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const json& v, const char* key, std::string_view name,
                                     std::size_t line) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw Error(where(name, line) + "field '" + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw Error(where(name, line) + "field '" + key + "' must contain strings");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

// Calls fn(record, line_number) for every non-blank line.
template <typename Fn>
void for_each_record(std::istream& is, std::string_view name, Fn&& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(where(name, n) + "malformed record: " + e.what());
    }
    if (!rec.is_object()) throw Error(where(name, n) + "record must be a JSON object");
    fn(rec, n);
  }
}

bool has_locatable_answer(const QAPair& qa, const Section& section) {
  return std::any_of(qa.answers.begin(), qa.answers.end(), [&](const std::string& a) {
    return text::locate(section.text, a).has_value();
  });
}

bool has_conflicting_labels(const QAPair& qa) {
  bool ex = qa.answer_type == AnswerType::Explicit;
  bool im = qa.answer_type == AnswerType::Implicit;
  for (auto t : qa.cross_answer_types) {
    ex = ex || t == AnswerType::Explicit;
    im = im || t == AnswerType::Implicit;
  }
  return !qa.cross_answer_types.empty() && ex && im;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Fisher-Yates with an unbiased bounded draw; std::shuffle and the standard
// distributions are implementation-defined, so splits would differ across
// standard libraries.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(v[i - 1], v[r % bound]);
  }
}

std::array<std::size_t, 3> allocate_books(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> frac{};
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    frac[i] = exact - static_cast<double>(counts[i]);
    used += counts[i];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[order[k % 3]];
  for (int i = 0; i < 3; ++i) {
    if (ratios[i] > 0 && counts[i] == 0) {
      auto big = std::max_element(counts.begin(), counts.end()) - counts.begin();
      --counts[big];
      ++counts[i];
    }
  }
  return counts;
}

void validate_ratios(const std::array<double, 3>& ratios) {
  double sum = 0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw Error("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error("split ratios must sum to 1");
}

}  // namespace

std::string_view to_string(QuestionType t) {
  return kQuestionTypeNames[static_cast<std::size_t>(t)];
}

std::string_view to_string(AnswerType t) {
  return t == AnswerType::Explicit ? "explicit" : "implicit";
}

QuestionType parse_question_type(std::string_view s) {
  const std::string lower = text::to_lower(text::trim(s));
  for (std::size_t i = 0; i < kQuestionTypeNames.size(); ++i) {
    if (lower == kQuestionTypeNames[i]) return static_cast<QuestionType>(i);
  }
  throw Error("unknown question type '" + std::string(s) + "'");
}

AnswerType parse_answer_type(std::string_view s) {
  const std::string lower = text::to_lower(text::trim(s));
  if (lower == "explicit") return AnswerType::Explicit;
  if (lower == "implicit") return AnswerType::Implicit;
  throw Error("unknown answer type '" + std::string(s) + "'");
}

QuestionType tag_question_type(std::string_view question) {
  for (const auto& tok : text::tokenize(question)) {
    for (auto t : kWhTypes) {
      if (tok == to_string(t)) return t;
    }
  }
  return QuestionType::Other;
}

const Section* Corpus::find_section(std::string_view story_id,
                                    std::string_view section_id) const {
  for (const auto& s : sections) {
    if (s.story_id == story_id && s.section_id == section_id) return &s;
  }
  return nullptr;
}

std::vector<std::string> Corpus::story_ids() const {
  std::set<std::string> ids;
  for (const auto& s : sections) ids.insert(s.story_id);
  return {ids.begin(), ids.end()};
}

LoadResult parse_corpus(std::istream& sections_in, std::istream& qa_in,
                        std::string_view sections_name, std::string_view qa_name) {
  LoadResult result;
  auto& corpus = result.corpus;
  std::set<std::pair<std::string, std::string>> keys;

  for_each_record(sections_in, sections_name, [&](const json& rec, std::size_t line) {
    Section s{require_string(rec, "story_id", sections_name, line),
              require_string(rec, "section_id", sections_name, line),
              require_string(rec, "text", sections_name, line)};
    if (text::trim(s.text).empty()) {
      throw Error(where(sections_name, line) + "section text is empty");
    }
    if (!keys.emplace(s.story_id, s.section_id).second) {
      throw Error(where(sections_name, line) + "duplicate section (" + s.story_id + ", " +
                  s.section_id + ")");
    }
    corpus.sections.push_back(std::move(s));
  });

  for_each_record(qa_in, qa_name, [&](const json& rec, std::size_t line) {
    QAPair qa;
    qa.story_id = require_string(rec, "story_id", qa_name, line);
    if (auto it = rec.find("section_ids"); it != rec.end()) {
      qa.source_section_ids = string_list(*it, "section_ids", qa_name, line);
    } else {
      qa.source_section_ids =
          string_list(require(rec, "section_id", qa_name, line), "section_id", qa_name, line);
    }
    if (qa.source_section_ids.empty()) {
      throw Error(where(qa_name, line) + "record lists no section");
    }
    qa.section_id = qa.source_section_ids.front();
    qa.question = text::trim(require_string(rec, "question", qa_name, line));
    if (qa.question.empty()) throw Error(where(qa_name, line) + "question is empty");
    qa.answers = string_list(require(rec, "answers", qa_name, line), "answers", qa_name, line);
    if (qa.answers.empty()) throw Error(where(qa_name, line) + "record has no answers");
    try {
      qa.answer_type = parse_answer_type(require_string(rec, "answer_type", qa_name, line));
      if (auto it = rec.find("question_type"); it != rec.end() && !it->is_null()) {
        qa.question_type = parse_question_type(it->get<std::string>());
      } else {
        qa.question_type = tag_question_type(qa.question);
      }
      if (auto it = rec.find("cross_answer_types"); it != rec.end()) {
        for (const auto& t : string_list(*it, "cross_answer_types", qa_name, line)) {
          qa.cross_answer_types.push_back(parse_answer_type(t));
        }
      }
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with(qa_name)) throw;
      throw Error(where(qa_name, line) + e.what());
    } catch (const json::exception& e) {
      throw Error(where(qa_name, line) + e.what());
    }
    for (const auto& sid : qa.source_section_ids) {
      if (!keys.contains({qa.story_id, sid})) {
        throw Error(where(qa_name, line) + "unknown section (" + qa.story_id + ", " + sid + ")");
      }
    }
    if (!qa.question.ends_with('?')) {
      result.warnings.push_back(where(qa_name, line) + "question does not end with '?'");
    }
    corpus.qa_pairs.push_back(std::move(qa));
  });

  if (corpus.qa_pairs.empty()) {
    result.warnings.push_back(std::string(qa_name) + ": no QA records");
  }
  return result;
}

LoadResult load_corpus(const std::filesystem::path& sections_path,
                       const std::filesystem::path& qa_path) {
  std::ifstream sections(sections_path);
  if (!sections) throw Error("cannot open sections file " + sections_path.string());
  std::ifstream qa(qa_path);
  if (!qa) throw Error("cannot open qa file " + qa_path.string());
  return parse_corpus(sections, qa, sections_path.string(), qa_path.string());
}

void write_sections(std::ostream& os, const std::vector<Section>& sections) {
  for (const auto& s : sections) {
    os << json{{"story_id", s.story_id}, {"section_id", s.section_id}, {"text", s.text}}.dump()
       << '\n';
  }
}

void write_qa_pairs(std::ostream& os, const std::vector<QAPair>& qa_pairs) {
  for (const auto& qa : qa_pairs) {
    json rec{{"story_id", qa.story_id},
             {"section_ids", qa.source_section_ids},
             {"question", qa.question},
             {"answers", qa.answers},
             {"answer_type", to_string(qa.answer_type)},
             {"question_type", to_string(qa.question_type)}};
    if (!qa.cross_answer_types.empty()) {
      auto& arr = rec["cross_answer_types"] = json::array();
      for (auto t : qa.cross_answer_types) arr.push_back(to_string(t));
    }
    os << rec.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& sections_path,
                 const std::filesystem::path& qa_path) {
  std::ofstream s(sections_path);
  if (!s) throw Error("cannot write " + sections_path.string());
  write_sections(s, corpus.sections);
  std::ofstream q(qa_path);
  if (!q) throw Error("cannot write " + qa_path.string());
  write_qa_pairs(q, corpus.qa_pairs);
}

PreprocessResult preprocess(const std::vector<Section>& sections,
                            const std::vector<QAPair>& qa_pairs, PreprocessMode mode) {
  std::map<std::pair<std::string, std::string>, const Section*> index;
  for (const auto& s : sections) index[{s.story_id, s.section_id}] = &s;

  PreprocessResult out;
  auto& rep = out.report;
  rep.input = qa_pairs.size();
  for (const auto& qa : qa_pairs) {
    if (qa.source_section_ids.size() > 1) {
      ++rep.removed_multi_section;
      continue;
    }
    if (mode == PreprocessMode::Answerability) {
      auto it = index.find({qa.story_id, qa.section_id});
      if (qa.answer_type == AnswerType::Explicit &&
          (it == index.end() || !has_locatable_answer(qa, *it->second))) {
        ++rep.removed_unlocatable_explicit;
        continue;
      }
      if (has_conflicting_labels(qa)) {
        ++rep.removed_conflicting_labels;
        continue;
      }
    }
    (qa.answer_type == AnswerType::Explicit ? rep.retained_explicit : rep.retained_implicit)++;
    out.qa_pairs.push_back(qa);
  }
  return out;
}

CorpusSplit split_by_books(const Corpus& corpus, const SplitSpec& spec) {
  validate_ratios(spec.ratios);
  auto books = corpus.story_ids();
  if (books.size() < 3) {
    throw Error("need at least 3 books to split into train/validation/test, got " +
                std::to_string(books.size()));
  }
  seeded_shuffle(books, spec.seed);
  const auto counts = allocate_books(books.size(), spec.ratios);

  CorpusSplit split;
  std::map<std::string, int> part_of;
  std::size_t next = 0;
  for (int p = 0; p < 3; ++p) {
    for (std::size_t i = 0; i < counts[p]; ++i, ++next) {
      part_of[books[next]] = p;
      split.books[p].push_back(books[next]);
    }
  }
  for (const auto& s : corpus.sections) split.parts[part_of.at(s.story_id)].sections.push_back(s);
  for (const auto& qa : corpus.qa_pairs) {
    split.parts[part_of.at(qa.story_id)].qa_pairs.push_back(qa);
  }
  return split;
}

std::vector<CorpusSplit> make_cross_validation_splits(const Corpus& corpus, int k,
                                                      std::uint64_t seed,
                                                      std::array<double, 3> ratios) {
  if (k < 2) throw Error("cross-validation needs k >= 2, got " + std::to_string(k));
  std::vector<CorpusSplit> folds;
  for (int f = 0; f < k; ++f) {
    auto split = split_by_books(
        corpus, SplitSpec{splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(f))), ratios});
    split.fold = f;
    folds.push_back(std::move(split));
  }
  return folds;
}

void write_split_manifest(std::ostream& os, const std::vector<CorpusSplit>& splits) {
  for (const auto& split : splits) {
    for (int p = 0; p < 3; ++p) {
      for (const auto& book : split.books[p]) {
        os << json{{"story_id", book}, {"split", kSplitNames[p]}, {"fold", split.fold}}.dump()
           << '\n';
      }
    }
  }
}

}  // namespace mqg
