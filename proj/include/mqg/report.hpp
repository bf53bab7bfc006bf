#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mqg/answerability.hpp"
#include "mqg/corpus.hpp"
#include "mqg/generator.hpp"
#include "mqg/metrics.hpp"

namespace mqg {

/// A generated question together with its answerability decision.
struct ClassifiedQuestion {
  GeneratedQuestion question;
  AnswerLabel label = AnswerLabel::NoAnswer;
  std::optional<std::pair<std::size_t, std::size_t>> span_offsets;  // byte range in section
  std::string answer_text;
  double cls_se = 0.0;
  double imp_se = 0.0;
  double a_se = 0.0;
  double tau = 0.0;
};

void write_classified(std::ostream& os, const std::vector<ClassifiedQuestion>& records);
std::vector<ClassifiedQuestion> read_classified(std::istream& is, std::string_view name);

enum class SelfBleuScope { PerSection, PerSectionPerType };

std::string_view to_string(SelfBleuScope s);
SelfBleuScope parse_self_bleu_scope(std::string_view s);

/// Report metric keys, in display order.
inline constexpr std::array<std::string_view, 7> kMetricNames = {
    "generated_per_section", "answerable_per_section", "rouge_l_f1", "rouge_l_alt",
    "bertscore_f1",          "bleurt",                 "self_bleu"};

struct AnswerTypeCounts {
  std::size_t explicit_count = 0;
  std::size_t implicit_count = 0;
  std::size_t no_answer_count = 0;

  std::size_t total() const { return explicit_count + implicit_count + no_answer_count; }
  AnswerTypeCounts& operator+=(const AnswerTypeCounts& o);
};

struct FoldMetrics {
  int fold = 0;
  std::map<std::string, std::optional<double>> values;  // nullopt = undefined
  std::vector<std::string> skipped;                     // metrics with no scorer configured
  AnswerTypeCounts answer_types;                        // over deduplicated questions
};

struct EvaluationOptions {
  SelfBleuScope self_bleu_scope = SelfBleuScope::PerSection;
  int max_ngram = 4;
  std::map<std::string, ExternalScorer> external_scorers;  // keyed by metric name
};

/// Evaluates one fold: generated/answerable counts per section (answerable
/// after per-section dedup), max-match and one-to-one Rouge-L against the
/// ground truth, external scorers, Self-BLEU, and the answer-type table.
FoldMetrics evaluate_fold(const std::vector<ClassifiedQuestion>& classified,
                          const std::vector<QAPair>& ground_truth,
                          const EvaluationOptions& options, int fold = 0);

struct MetricsReport {
  std::vector<FoldMetrics> folds;
  std::map<std::string, MetricSummary> aggregate;
  AnswerTypeCounts answer_types;  // pooled over folds
  nlohmann::json provenance = nlohmann::json::object();
};

MetricsReport aggregate(std::vector<FoldMetrics> folds, nlohmann::json provenance = {});

nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

/// Fold rows plus an aggregate row, M/SE columns per metric, "-" for undefined
/// values; a single-fold SE is printed as 0 and flagged.
std::string render_table(const MetricsReport& report);

}  // namespace mqg
