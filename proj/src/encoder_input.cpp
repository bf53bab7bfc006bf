#include "mqg/encoder_input.hpp"

#include <algorithm>
#include <map>

#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg {
namespace {

constexpr std::string_view kJoiner = " [SEP] ";

std::size_t count(std::string_view s) { return text::tokenize(s).size(); }

}  // namespace

std::string EncoderInput::rendered() const {
  std::string out(to_string(question_type));
  out += kJoiner;
  out += context;
  for (const auto& q : reference_questions) {
    out += kJoiner;
    out += q;
  }
  return out;
}

EncoderInput EncoderInput::parse(std::string_view rendered) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = rendered.find(kJoiner, start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(rendered.substr(start));
      break;
    }
    fields.emplace_back(rendered.substr(start, pos - start));
    start = pos + kJoiner.size();
  }
  if (fields.size() < 2) throw Error("encoder input lacks a separator: " + std::string(rendered));
  EncoderInput in;
  in.question_type = parse_question_type(fields[0]);
  in.context = fields[1];
  in.reference_questions.assign(fields.begin() + 2, fields.end());
  return in;
}

std::size_t EncoderInput::token_count() const {
  std::size_t n = 2 + count(context);  // type word + separator
  for (const auto& q : reference_questions) n += 1 + count(q);
  return n;
}

EncoderInput fit_to_budget(EncoderInput input, std::size_t max_tokens) {
  while (input.token_count() > max_tokens && !input.reference_questions.empty()) {
    input.reference_questions.pop_back();
  }
  if (input.token_count() <= max_tokens) return input;
  if (max_tokens < 3) {
    throw Error("token budget " + std::to_string(max_tokens) +
                " is smaller than the shortest renderable input");
  }
  const auto tokens = text::tokenize_with_offsets(input.context);
  const std::size_t keep = max_tokens - 2;
  input.context = input.context.substr(0, tokens[keep - 1].end);
  return input;
}

TrainingExample build_training_example(const QAPair& target, const Section& context,
                                       std::span<const std::string> same_context_questions,
                                       std::size_t max_input_tokens, std::size_t reference_cap) {
  if (target.story_id != context.story_id || target.section_id != context.section_id) {
    throw Error("target question belongs to (" + target.story_id + ", " + target.section_id +
                ") but context is (" + context.story_id + ", " + context.section_id + ")");
  }
  if (target.question_type == QuestionType::Other) {
    throw Error("target question has no wh-type: " + target.question);
  }
  if (std::find(same_context_questions.begin(), same_context_questions.end(), target.question) !=
      same_context_questions.end()) {
    throw Error("reference list contains the target question: " + target.question);
  }
  EncoderInput in;
  in.question_type = target.question_type;
  in.context = context.text;
  const auto n = std::min(reference_cap, same_context_questions.size());
  in.reference_questions.assign(same_context_questions.begin(),
                                same_context_questions.begin() + static_cast<long>(n));
  return {fit_to_budget(std::move(in), max_input_tokens), target.question, target.story_id,
          target.section_id};
}

std::vector<TrainingExample> build_training_examples(const Corpus& corpus,
                                                     std::size_t max_input_tokens,
                                                     std::size_t reference_cap) {
  std::map<std::pair<std::string, std::string>, std::vector<const QAPair*>> by_section;
  for (const auto& qa : corpus.qa_pairs) by_section[{qa.story_id, qa.section_id}].push_back(&qa);

  std::vector<TrainingExample> out;
  for (const auto& section : corpus.sections) {
    auto it = by_section.find({section.story_id, section.section_id});
    if (it == by_section.end()) continue;
    const auto& group = it->second;
    for (std::size_t t = 0; t < group.size(); ++t) {
      if (group[t]->question_type == QuestionType::Other) continue;
      std::vector<std::string> refs;
      for (std::size_t r = 0; r < group.size(); ++r) {
        if (r != t && group[r]->question != group[t]->question) refs.push_back(group[r]->question);
      }
      out.push_back(build_training_example(*group[t], section, refs, max_input_tokens,
                                           reference_cap));
    }
  }
  return out;
}

}  // namespace mqg
