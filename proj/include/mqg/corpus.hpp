#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mqg {

enum class QuestionType { What, When, Where, Which, Who, Why, How, Other };
enum class AnswerType { Explicit, Implicit };

/// The seven wh-words usable as a generation prefix, in canonical order.
inline constexpr std::array<QuestionType, 7> kWhTypes = {
    QuestionType::What, QuestionType::When, QuestionType::Where, QuestionType::Which,
    QuestionType::Who,  QuestionType::Why,  QuestionType::How};

std::string_view to_string(QuestionType t);
std::string_view to_string(AnswerType t);
QuestionType parse_question_type(std::string_view s);  // throws on unknown
AnswerType parse_answer_type(std::string_view s);      // throws on unknown

/// Returns the first of the seven wh-words met while scanning the tokenized,
/// lowercased question left to right, or Other.
QuestionType tag_question_type(std::string_view question);

struct Section {
  std::string story_id;
  std::string section_id;
  std::string text;
};

struct QAPair {
  std::string story_id;
  std::string section_id;                    // home section (first listed)
  std::vector<std::string> source_section_ids;  // as annotated; size > 1 = multi-section
  std::string question;
  std::vector<std::string> answers;
  AnswerType answer_type = AnswerType::Explicit;
  QuestionType question_type = QuestionType::Other;
  std::vector<AnswerType> cross_answer_types;  // per-annotator labels, optional
};

struct Corpus {
  std::vector<Section> sections;
  std::vector<QAPair> qa_pairs;

  const Section* find_section(std::string_view story_id, std::string_view section_id) const;
  std::vector<std::string> story_ids() const;  // sorted, unique
};

struct LoadResult {
  Corpus corpus;
  std::vector<std::string> warnings;
};

/// Reads line-delimited JSON sections and QA records. Parse failures and
/// dangling section references throw with the offending line number.
LoadResult load_corpus(const std::filesystem::path& sections_path,
                       const std::filesystem::path& qa_path);
LoadResult parse_corpus(std::istream& sections, std::istream& qa,
                        std::string_view sections_name = "sections",
                        std::string_view qa_name = "qa");

void write_sections(std::ostream& os, const std::vector<Section>& sections);
void write_qa_pairs(std::ostream& os, const std::vector<QAPair>& qa_pairs);
void save_corpus(const Corpus& corpus, const std::filesystem::path& sections_path,
                 const std::filesystem::path& qa_path);

enum class PreprocessMode { QG, Answerability };

struct PreprocessReport {
  std::size_t input = 0;
  std::size_t removed_multi_section = 0;
  std::size_t removed_unlocatable_explicit = 0;
  std::size_t removed_conflicting_labels = 0;
  std::size_t retained_explicit = 0;
  std::size_t retained_implicit = 0;

  std::size_t retained_total() const { return retained_explicit + retained_implicit; }
};

struct PreprocessResult {
  std::vector<QAPair> qa_pairs;
  PreprocessReport report;
};

/// Applies the cleaning rules for the requested mode. Each removed question is
/// charged to the first rule that rejects it, checked in the order multi-section,
/// unlocatable explicit answer, conflicting cross-annotation.
PreprocessResult preprocess(const std::vector<Section>& sections,
                            const std::vector<QAPair>& qa_pairs, PreprocessMode mode);

struct SplitSpec {
  std::uint64_t seed = 0;
  std::array<double, 3> ratios = {0.8, 0.1, 0.1};
};

inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "validation", "test"};

struct CorpusSplit {
  std::array<Corpus, 3> parts;                      // train, validation, test
  std::array<std::vector<std::string>, 3> books;    // story ids per part
  int fold = 0;

  const Corpus& train() const { return parts[0]; }
  const Corpus& validation() const { return parts[1]; }
  const Corpus& test() const { return parts[2]; }
};

/// Book-level partition. Books are sorted, shuffled with the seed, and sized by
/// largest remainder.
CorpusSplit split_by_books(const Corpus& corpus, const SplitSpec& spec);

/// k independent seeded book-level splits.
std::vector<CorpusSplit> make_cross_validation_splits(const Corpus& corpus, int k,
                                                      std::uint64_t seed,
                                                      std::array<double, 3> ratios = {0.8, 0.1,
                                                                                      0.1});

/// One JSON line per book: story_id, split, fold.
void write_split_manifest(std::ostream& os, const std::vector<CorpusSplit>& splits);

}  // namespace mqg
