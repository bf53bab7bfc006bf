#pragma once

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mqg/corpus.hpp"
#include "mqg/generator.hpp"

namespace mqg::testing {

inline QAPair qa(std::string story, std::string section, std::string question,
                 std::vector<std::string> answers = {"x"},
                 AnswerType type = AnswerType::Explicit) {
  QAPair q;
  q.story_id = std::move(story);
  q.section_id = std::move(section);
  q.source_section_ids = {q.section_id};
  q.question = std::move(question);
  q.answers = std::move(answers);
  q.answer_type = type;
  q.question_type = tag_question_type(q.question);
  return q;
}

// Books "b0".."b{n-1}", each with `sections` sections and two questions per section.
inline Corpus toy_corpus(int books, int sections = 2) {
  Corpus c;
  for (int b = 0; b < books; ++b) {
    const std::string story = "b" + std::to_string(b);
    for (int s = 0; s < sections; ++s) {
      const std::string sid = "s" + std::to_string(s);
      c.sections.push_back({story, sid, "The fox of book " + std::to_string(b) +
                                            " ran to the river in part " + std::to_string(s) + "."});
      c.qa_pairs.push_back(qa(story, sid, "Who ran to the river?", {"the fox"}));
      c.qa_pairs.push_back(qa(story, sid, "Why did the fox run?", {"it was late"},
                              AnswerType::Implicit));
    }
  }
  return c;
}

// Returns a fixed ranked list and records every input it was asked to decode.
class ScriptedDecoder : public QuestionDecoder {
 public:
  explicit ScriptedDecoder(std::vector<std::string> ranked) : ranked_(std::move(ranked)) {}

  std::vector<Hypothesis> decode(const EncoderInput& input, int num_hypotheses, int) override {
    seen.push_back(input);
    std::vector<Hypothesis> out;
    for (int i = 0; i < num_hypotheses && i < static_cast<int>(ranked_.size()); ++i) {
      out.push_back({ranked_[static_cast<std::size_t>(i)], -static_cast<double>(i)});
    }
    return out;
  }

  std::vector<EncoderInput> seen;

 private:
  std::vector<std::string> ranked_;
};

// Deterministic decoder whose hypotheses depend on type and history length, so
// recursion produces distinct questions without any model.
class CountingDecoder : public QuestionDecoder {
 public:
  std::vector<Hypothesis> decode(const EncoderInput& input, int num_hypotheses, int) override {
    seen.push_back(input);
    std::vector<Hypothesis> out;
    const auto h = input.reference_questions.size();
    for (int k = 0; k < num_hypotheses; ++k) {
      out.push_back({std::string(to_string(input.question_type)) + " question " +
                         std::to_string((h + static_cast<std::size_t>(k)) % 3) + "?",
                     -static_cast<double>(k)});
    }
    return out;
  }

  std::vector<EncoderInput> seen;
};

inline std::string random_sentence(std::mt19937& rng, int max_len,
                                   const std::vector<std::string>& alphabet) {
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += alphabet[pick(rng)];
  }
  return out;
}

}  // namespace mqg::testing
