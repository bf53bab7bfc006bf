#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mqg/answerability.hpp"

namespace mqg {

/// Keeps the first occurrence of each normalized question text.
std::vector<std::string> dedup(const std::vector<std::string>& questions);

/// Number of labels that are explicit or implicit.
std::size_t count_answerable(const std::vector<AnswerLabel>& labels);

/// LCS-based Rouge-L F1 (beta = 1) over punctuation-separated lowercase tokens,
/// scaled to [0, 100]. Throws if either side has no tokens.
double rouge_l_f1(std::string_view reference, std::string_view candidate);
double rouge_l_f1_tokens(const std::vector<std::string>& reference,
                         const std::vector<std::string>& candidate);

/// Ground truth and generated questions of one section.
struct SectionQuestions {
  std::vector<std::string> ground_truth;
  std::vector<std::string> generated;  // generation order
};

using PairScore = std::function<double(const std::string& reference, const std::string& candidate)>;

/// Per ground-truth question, the best score over its section's generated
/// questions (one-to-many allowed); mean over all ground-truth questions.
double max_match_mean(const std::vector<SectionQuestions>& sections, const PairScore& score);
double rouge_l_max(const std::vector<SectionQuestions>& sections);

/// One-to-one variant: ground truth in corpus order greedily takes its best
/// remaining candidate (earliest on ties), which is then unavailable. A ground
/// truth question left without candidates scores 0.
double rouge_l_alt(const std::vector<SectionQuestions>& sections);

/// Sentence BLEU with n-grams up to max_ngram, uniform weights, smoothing
/// method 1 (epsilon added to zero n-gram matches) and the standard brevity
/// penalty against the closest reference length. Hypotheses shorter than
/// max_ngram use orders up to their own length.
double sentence_bleu(const std::vector<std::vector<std::string>>& references,
                     const std::vector<std::string>& hypothesis, int max_ngram = 4,
                     double epsilon = 0.1);

/// Mean sentence BLEU of each question against the rest of the group, on
/// lowercase whitespace tokens. Undefined (nullopt) for fewer than 2 questions.
std::optional<double> self_bleu(const std::vector<std::string>& group, int max_ngram = 4);

/// Mean over groups with a defined Self-BLEU; nullopt if none is defined.
std::optional<double> corpus_self_bleu(const std::vector<std::vector<std::string>>& groups,
                                       int max_ngram = 4);

/// Mean and standard error (sample stdev / sqrt(k)) of a metric across folds.
struct MetricSummary {
  std::vector<std::optional<double>> per_fold;
  std::optional<double> mean;
  std::optional<double> standard_error;
  bool single_fold = false;
  bool skipped = false;
};

MetricSummary summarize(const std::vector<std::optional<double>>& per_fold);

/// External similarity scorer (e.g. a BERTScore or BLEURT process) speaking the
/// line protocol: one JSON object {"reference", "candidate"} per input line,
/// one number per output line.
class ExternalScorer {
 public:
  explicit ExternalScorer(std::string command) : command_(std::move(command)) {}

  bool configured() const { return !command_.empty(); }
  std::vector<double> score(const std::vector<std::pair<std::string, std::string>>& pairs) const;

 private:
  std::string command_;
};

/// Max-match mean of an external scorer over sections, or nullopt (skipped)
/// when the scorer is not configured.
std::optional<double> external_max_match(const ExternalScorer& scorer,
                                         const std::vector<SectionQuestions>& sections);

}  // namespace mqg
