#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mqg/corpus.hpp"

namespace mqg {

enum class AnswerLabel { Explicit, Implicit, NoAnswer };

std::string_view to_string(AnswerLabel l);
AnswerLabel parse_answer_label(std::string_view s);

/// Token layout fed to the span encoder:
///   [CLS] question... [SEP] ([IMP]) context...
struct QaLayout {
  std::vector<std::string> tokens;
  std::size_t cls_index = 0;
  std::optional<std::size_t> imp_index;
  std::size_t context_begin = 0;  // first context token position
  std::size_t context_end = 0;    // one past the last context token
  std::vector<std::pair<std::size_t, std::size_t>> context_offsets;  // byte ranges per context token
};

/// Context tokens past the budget are dropped; throws when not even one
/// context token fits or either input is empty.
QaLayout build_qa_input(std::string_view question, std::string_view context, bool with_imp,
                        std::size_t max_tokens);

struct SpanScores {
  std::vector<double> start_logits;
  std::vector<double> end_logits;
  std::size_t cls_index = 0;
  std::optional<std::size_t> imp_index;
  std::size_t context_begin = 0;  // eligible answer positions [context_begin, context_end)
  std::size_t context_end = 0;

  void validate() const;
};

struct ClassifierConfig {
  double tau = 0.0;
  std::size_t max_answer_length = 30;
  std::size_t n_best = 20;
};

struct ClassificationResult {
  AnswerLabel label = AnswerLabel::NoAnswer;
  std::optional<std::pair<std::size_t, std::size_t>> best_span;  // inclusive token positions
  double cls_se = 0.0;
  double imp_se = 0.0;
  double a_se = 0.0;
};

/// Threshold decision on summed start+end logits:
///   no_answer if cls_se > a_se + tau and cls_se > imp_se + tau,
///   implicit  else if imp_se > a_se,
///   explicit  otherwise.
/// The unconstrained argmax end landing before the argmax start also yields no_answer.
ClassificationResult classify(const SpanScores& scores, const ClassifierConfig& config);

struct ThresholdPoint {
  double tau = 0.0;
  double answerable_ratio = 0.0;
};

struct ThresholdCurve {
  std::vector<ThresholdPoint> points;
  double recommended_tau = 0.0;
};

/// Evenly spaced ascending grid lo, lo+step, ..., <= hi.
std::vector<double> make_tau_grid(double lo, double hi, double step = 1.0);

/// Answerable ratio (explicit or implicit) of a ground-truth answerable set at
/// each tau; points are ascending in tau and the ratio never decreases with it.
/// Scanning from the largest tau downwards, the recommended tau is the smallest
/// value reached before the ratio drops by more than `drop_tolerance` in one
/// grid step (a fraction, 0.02 = 2 points). Without such a drop it is the
/// smallest grid value.
ThresholdCurve sweep_threshold(const std::vector<SpanScores>& ground_truth_scores,
                               const std::vector<double>& tau_grid,
                               const ClassifierConfig& base = {},
                               double drop_tolerance = 0.02);

/// SQuAD-style answer normalization: lowercase, strip punctuation and articles.
std::vector<std::string> answer_tokens(std::string_view s);
double token_f1(std::string_view prediction, std::string_view gold);

struct LabeledPrediction {
  AnswerType gold_type = AnswerType::Explicit;
  std::vector<std::string> gold_answers;
  AnswerLabel predicted = AnswerLabel::NoAnswer;
  std::string predicted_text;  // extracted span text when predicted explicit
};

struct TypeScores {
  std::size_t count = 0;
  double f1 = 0.0;        // percentage
  double accuracy = 0.0;  // percentage
};

struct ClassifierEvaluation {
  TypeScores explicit_scores;
  TypeScores implicit_scores;
  TypeScores total;
};

/// Explicit gold is accurate when the prediction is explicit and shares at least
/// one token with a gold answer; F1 is the best token F1 over gold answers.
/// Implicit gold scores 1 under both metrics only when predicted implicit.
ClassifierEvaluation evaluate_classifier(const std::vector<LabeledPrediction>& predictions);

/// Produces span scores for a (question, context) pair.
class SpanScorer {
 public:
  virtual ~SpanScorer() = default;
  virtual SpanScores score(const std::string& question, const std::string& context,
                           QaLayout* layout = nullptr) = 0;
};

/// Model-free scorer: a context token scores by how many question words occur
/// in the `window` tokens before it; [CLS] is fixed and [IMP] rises when the
/// question shares any word with the context. With the defaults and tau = 0,
/// no overlap gives no_answer, a single preceding hit implicit, two or more
/// explicit.
class LexicalSpanScorer : public SpanScorer {
 public:
  explicit LexicalSpanScorer(double cls_logit = 0.5, double imp_logit = 0.3,
                             std::size_t window = 3, std::size_t max_tokens = 512)
      : cls_logit_(cls_logit), imp_logit_(imp_logit), window_(window), max_tokens_(max_tokens) {}

  SpanScores score(const std::string& question, const std::string& context,
                   QaLayout* layout = nullptr) override;

 private:
  double cls_logit_;
  double imp_logit_;
  std::size_t window_;
  std::size_t max_tokens_;
};

void write_span_scores(std::ostream& os, const SpanScores& s);
SpanScores span_scores_from_json_line(std::string_view line);

}  // namespace mqg
