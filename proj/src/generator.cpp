#include "mqg/generator.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg {

using nlohmann::json;

void GenerationConfig::validate() const {
  if (questions_per_type < 1) throw Error("questions per type must be positive");
  if (beam_size < 1) throw Error("beam size must be positive");
  if (max_new_tokens < 1) throw Error("max_new_tokens must be positive");
  if (types.empty()) throw Error("no question types requested");
  for (auto t : types) {
    if (t == QuestionType::Other) throw Error("'other' is not a generation type");
  }
}

EncoderInput initial_input(const Section& section, QuestionType type) {
  if (type == QuestionType::Other) throw Error("'other' is not a generation type");
  return EncoderInput{type, section.text, {}};
}

StepResult generate_step(QuestionDecoder& decoder, const EncoderInput& input,
                         const std::unordered_set<std::string>& already,
                         const GenerationConfig& config) {
  const auto hyps = decoder.decode(input, config.beam_size, config.max_new_tokens);
  if (hyps.empty()) throw Error("decoder produced no hypotheses");
  const auto limit = std::min<std::size_t>(hyps.size(), static_cast<std::size_t>(config.beam_size));
  for (std::size_t r = 0; r < limit; ++r) {
    if (!already.contains(text::normalize_question(hyps[r].text))) {
      return {hyps[r].text, static_cast<int>(r) + 1, false};
    }
  }
  return {hyps.front().text, 1, true};
}

std::vector<GeneratedQuestion> generate_section(QuestionDecoder& decoder, const Section& section,
                                                const GenerationConfig& config) {
  config.validate();
  std::vector<GeneratedQuestion> out;
  out.reserve(config.types.size() * static_cast<std::size_t>(config.questions_per_type));
  for (auto type : config.types) {
    EncoderInput input = initial_input(section, type);
    std::unordered_set<std::string> already;
    for (int i = 1; i <= config.questions_per_type; ++i) {
      const EncoderInput step_input =
          config.max_input_tokens > 0 ? fit_to_budget(input, config.max_input_tokens) : input;
      auto step = generate_step(decoder, step_input, already, config);
      already.insert(text::normalize_question(step.text));
      input.reference_questions.push_back(step.text);
      out.push_back({section.story_id, section.section_id, type, i, step.beam_rank,
                     std::move(step.text), step.fallback_duplicate});
    }
  }
  return out;
}

void write_generated(std::ostream& os, const std::vector<GeneratedQuestion>& questions) {
  for (const auto& q : questions) {
    os << json{{"story_id", q.story_id},
               {"section_id", q.section_id},
               {"question_type", to_string(q.question_type)},
               {"iteration", q.iteration},
               {"beam_rank", q.beam_rank},
               {"text", q.text},
               {"fallback_duplicate", q.fallback_duplicate}}
              .dump()
       << '\n';
  }
}

std::vector<Hypothesis> TemplateDecoder::decode(const EncoderInput& input, int num_hypotheses,
                                                int max_new_tokens) {
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  for (const auto& t : text::tokenize(text::to_lower(input.context))) {
    if (t.size() > 3 && std::isalpha(static_cast<unsigned char>(t[0])) && seen.insert(t).second) {
      words.push_back(t);
    }
  }
  if (words.empty()) words.push_back("story");
  std::string wh(to_string(input.question_type));
  wh[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(wh[0])));
  std::vector<Hypothesis> out;
  const std::size_t h = input.reference_questions.size();
  for (int k = 0; k < num_hypotheses; ++k) {
    const auto& w = words[(h + static_cast<std::size_t>(k)) % words.size()];
    std::string q = wh + " is " + w + " about";
    auto toks = text::tokenize(q);
    if (static_cast<int>(toks.size()) > max_new_tokens) {
      toks.resize(static_cast<std::size_t>(std::max(1, max_new_tokens)));
      q = text::join(toks, " ");
    }
    out.push_back({q + "?", -static_cast<double>(k)});
  }
  return out;
}

std::vector<GeneratedQuestion> read_generated(std::istream& is, std::string_view name) {
  std::vector<GeneratedQuestion> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      const auto rec = json::parse(line);
      GeneratedQuestion q;
      q.story_id = rec.at("story_id").get<std::string>();
      q.section_id = rec.at("section_id").get<std::string>();
      q.question_type = parse_question_type(rec.at("question_type").get<std::string>());
      q.iteration = rec.value("iteration", 1);
      q.beam_rank = rec.value("beam_rank", 1);
      q.text = rec.at("text").get<std::string>();
      q.fallback_duplicate = rec.value("fallback_duplicate", false);
      out.push_back(std::move(q));
    } catch (const std::exception& e) {
      throw Error(std::string(name) + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace mqg
