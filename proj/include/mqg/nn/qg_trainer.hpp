#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "mqg/corpus.hpp"
#include "mqg/encoder_input.hpp"
#include "mqg/mqs.hpp"
#include "mqg/nn/seq2seq.hpp"
#include "mqg/nn/vocabulary.hpp"

namespace mqg {
class RunConfig;
}

namespace mqg::nn {

enum class SelectionCriterion { ValidationMqsLoss, ValidationTotalLoss };

std::string_view to_string(SelectionCriterion c);
SelectionCriterion parse_selection_criterion(std::string_view s);

struct TrainingObjectiveConfig {
  std::string base_checkpoint = "tiny-random";
  double beta = 1.0;
  double learning_rate = 5e-6;
  int batch_size = 8;
  int epochs = 15;
  std::size_t max_input_tokens = 512;
  std::uint64_t seed = 0;
  SelectionCriterion selection_criterion = SelectionCriterion::ValidationMqsLoss;
  std::size_t reference_cap = kDefaultReferenceCap;
  ModelConfig model;  // used when base_checkpoint is tiny-random

  void validate() const;
  static TrainingObjectiveConfig from_run_config(const RunConfig& cfg);
};

/// Question generation model plus the vocabulary it was built with.
struct QgModel {
  Seq2Seq network{nullptr};
  Vocabulary vocab;

  void save(const std::filesystem::path& dir) const;
  static QgModel load(const std::filesystem::path& dir);
};

/// Resolves `tiny-random` (fresh model, vocabulary from `texts`) or a checkpoint
/// directory, looked up directly and then under $MQG_CACHE_DIR.
QgModel make_base_model(const std::string& base_checkpoint, const std::vector<std::string>& texts,
                        const ModelConfig& dims, std::uint64_t seed);

std::filesystem::path resolve_checkpoint(const std::string& name);

/// Token ids for one example, with the encoder positions of each reference
/// question (separators and end-of-sequence excluded).
struct EncodedExample {
  std::vector<std::int64_t> source;
  std::vector<TokenSpan> reference_spans;
  std::vector<std::int64_t> target;  // question tokens without BOS/EOS
};

EncodedExample encode_example(const TrainingExample& example, const Vocabulary& vocab,
                              std::size_t max_positions);

struct BatchLosses {
  torch::Tensor ce;     // mean token cross-entropy
  torch::Tensor mqs;    // mean over examples with at least one reference; detached when beta == 0
  torch::Tensor total;  // ce + beta * mqs
  std::size_t mqs_examples = 0;
};

/// Mean-pools reference spans from the encoder states and the target tokens
/// from the decoder states, and combines cross-entropy with the MQS hinge.
BatchLosses compute_losses(Seq2Seq& network, const std::vector<const EncodedExample*>& batch,
                           double beta);

/// Differentiable MQS term for one example: references [m,D], target [D].
torch::Tensor mqs_loss_tensor(const torch::Tensor& references, const torch::Tensor& target);

struct EpochLog {
  int epoch = 0;
  std::string split;
  double ce_loss = 0.0;
  double mqs_loss = 0.0;
  double total_loss = 0.0;
};

void write_training_log(std::ostream& os, const std::vector<EpochLog>& log);

struct TrainResult {
  QgModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

/// Fine-tunes on the train split with the combined objective and keeps the
/// epoch that minimizes the selection criterion on the validation split (the
/// training split stands in when validation is empty).
TrainResult train_qg(const Corpus& train, const Corpus& validation,
                     const TrainingObjectiveConfig& config,
                     const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace mqg::nn
