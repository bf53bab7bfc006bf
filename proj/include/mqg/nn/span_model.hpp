#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mqg/answerability.hpp"
#include "mqg/corpus.hpp"
#include "mqg/nn/qg_trainer.hpp"
#include "mqg/nn/seq2seq.hpp"
#include "mqg/nn/vocabulary.hpp"

namespace mqg {
class RunConfig;
}

namespace mqg::nn {

/// General QA record (SQuAD 2.0 style).
struct SquadRecord {
  std::string question;
  std::string context;
  std::string answer_text;
  std::size_t answer_start = 0;  // byte offset into context
  bool is_impossible = false;
};

/// One JSON object per line: question, context, answer_text, answer_start,
/// is_impossible. Answerable records must carry an answer matching the context.
std::vector<SquadRecord> load_squad(const std::filesystem::path& path);

struct SpanClassifier : SpanScorer {
  SpanEncoder network{nullptr};
  Vocabulary vocab;
  std::size_t max_tokens = 256;

  /// Raw start/end logits over the [IMP]-augmented layout, no thresholding.
  SpanScores score(const std::string& question, const std::string& context,
                   QaLayout* layout = nullptr) override;

  void save(const std::filesystem::path& dir) const;
  static SpanClassifier load(const std::filesystem::path& dir);
};

struct AnswerabilityTrainConfig {
  std::string base_checkpoint = "tiny-random";
  double learning_rate = 5e-6;
  int batch_size = 16;
  int epochs = 8;  // per step
  std::size_t max_tokens = 256;
  std::uint64_t seed = 0;
  ModelConfig model;

  void validate() const;
  static AnswerabilityTrainConfig from_run_config(const RunConfig& cfg);
};

/// Token ids plus gold start/end positions.
struct SpanTarget {
  std::vector<std::int64_t> ids;
  std::int64_t start = 0;
  std::int64_t end = 0;
};

/// Step-1 target: the answer's token span, or the [CLS] position when the
/// question is unanswerable (or its answer was truncated away).
SpanTarget make_step1_target(const SquadRecord& record, const Vocabulary& vocab,
                             std::size_t max_tokens);

/// Step-2 target on narrative data: located answer span for explicit
/// questions, the [IMP] position for implicit ones.
SpanTarget make_step2_target(const QAPair& qa, const Section& section, const Vocabulary& vocab,
                             std::size_t max_tokens);

struct TwoStepResult {
  SpanClassifier classifier;
  std::vector<EpochLog> step1_log;  // ce_loss holds the mean start/end cross-entropy
  std::vector<EpochLog> step2_log;
};

/// Step 1 on general QA data, step 2 continued on the narrative corpus. When
/// `checkpoint_dir` is non-empty the classifier is saved after each step under
/// step1/ and step2/.
TwoStepResult train_two_step(const std::vector<SquadRecord>& general_qa, const Corpus& narrative,
                             const AnswerabilityTrainConfig& config,
                             const std::filesystem::path& checkpoint_dir = {},
                             const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace mqg::nn
