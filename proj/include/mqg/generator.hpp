#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_set>
#include <vector>

#include "mqg/corpus.hpp"
#include "mqg/encoder_input.hpp"

namespace mqg {

struct GenerationConfig {
  int questions_per_type = 4;  // n
  int beam_size = 5;           // b
  int max_new_tokens = 32;
  std::size_t max_input_tokens = 0;  // 0 disables budget fitting
  std::vector<QuestionType> types{kWhTypes.begin(), kWhTypes.end()};

  void validate() const;
};

struct GeneratedQuestion {
  std::string story_id;
  std::string section_id;
  QuestionType question_type = QuestionType::What;
  int iteration = 1;  // 1-based
  int beam_rank = 1;  // 1-based
  std::string text;
  bool fallback_duplicate = false;
};

struct Hypothesis {
  std::string text;
  double score = 0.0;
};

/// Anything that turns an encoder input into ranked hypotheses (best first).
class QuestionDecoder {
 public:
  virtual ~QuestionDecoder() = default;
  virtual std::vector<Hypothesis> decode(const EncoderInput& input, int num_hypotheses,
                                         int max_new_tokens) = 0;
};

/// Model-free decoder: hypothesis k asks about the (h + k)-th distinct content
/// word of the context, where h is the number of history questions.
class TemplateDecoder : public QuestionDecoder {
 public:
  std::vector<Hypothesis> decode(const EncoderInput& input, int num_hypotheses,
                                 int max_new_tokens) override;
};

struct StepResult {
  std::string text;
  int beam_rank = 1;
  bool fallback_duplicate = false;
};

EncoderInput initial_input(const Section& section, QuestionType type);

/// Highest-ranked hypothesis whose normalized text is not in `already`; if every
/// hypothesis is a repeat, the top one is returned with the fallback flag set.
StepResult generate_step(QuestionDecoder& decoder, const EncoderInput& input,
                         const std::unordered_set<std::string>& already,
                         const GenerationConfig& config);

/// Recursive generation: per type, n sequential steps where step i sees the
/// questions accepted at steps 1..i-1 (same section, same type) as history.
std::vector<GeneratedQuestion> generate_section(QuestionDecoder& decoder, const Section& section,
                                                const GenerationConfig& config);

void write_generated(std::ostream& os, const std::vector<GeneratedQuestion>& questions);
std::vector<GeneratedQuestion> read_generated(std::istream& is, std::string_view name);

}  // namespace mqg
