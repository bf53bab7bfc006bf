#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mqg/corpus.hpp"

namespace mqg {

/// Encoder-side input: "QT [SEP] context [SEP] q1 [SEP] q2 ...".
struct EncoderInput {
  QuestionType question_type = QuestionType::What;
  std::string context;
  std::vector<std::string> reference_questions;

  std::string rendered() const;

  /// Inverse of rendered(); exact when no field contains the separator literal.
  static EncoderInput parse(std::string_view rendered);

  /// Token count under text::tokenize (each separator counts as one token).
  std::size_t token_count() const;

  bool operator==(const EncoderInput&) const = default;
};

/// Shrinks `input` to at most `max_tokens` tokens: references are dropped from
/// the end of the list first, then the context tail is cut. The type prefix is
/// never touched, and at least one context token must survive.
EncoderInput fit_to_budget(EncoderInput input, std::size_t max_tokens);

struct TrainingExample {
  EncoderInput input;
  std::string target;
  std::string story_id;
  std::string section_id;
};

inline constexpr std::size_t kDefaultReferenceCap = 8;

/// Pairs a target question with its section and the other ground-truth
/// questions of that section (any type, corpus order) as references.
TrainingExample build_training_example(const QAPair& target, const Section& context,
                                       std::span<const std::string> same_context_questions,
                                       std::size_t max_input_tokens,
                                       std::size_t reference_cap = kDefaultReferenceCap);

/// One example per QA pair whose type is one of the seven wh-words.
std::vector<TrainingExample> build_training_examples(const Corpus& corpus,
                                                     std::size_t max_input_tokens,
                                                     std::size_t reference_cap =
                                                         kDefaultReferenceCap);

}  // namespace mqg
