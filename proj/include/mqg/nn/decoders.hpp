#pragma once

#include <cstdint>
#include <random>

#include "mqg/generator.hpp"
#include "mqg/nn/qg_trainer.hpp"

namespace mqg::nn {

/// Beam search returning up to `num_hypotheses` finished sequences ranked by
/// length-normalized log-probability (beam width = num_hypotheses).
class BeamSearchDecoder : public QuestionDecoder {
 public:
  BeamSearchDecoder(QgModel& model, std::size_t max_input_tokens)
      : model_(model), max_input_tokens_(max_input_tokens) {}

  std::vector<Hypothesis> decode(const EncoderInput& input, int num_hypotheses,
                                 int max_new_tokens) override;

 private:
  QgModel& model_;
  std::size_t max_input_tokens_;
};

/// Nucleus (top-p) sampling of `num_hypotheses` independent sequences, ranked
/// by length-normalized log-probability.
class NucleusSamplingDecoder : public QuestionDecoder {
 public:
  NucleusSamplingDecoder(QgModel& model, std::size_t max_input_tokens, double top_p,
                         std::uint64_t seed)
      : model_(model), max_input_tokens_(max_input_tokens), top_p_(top_p), rng_(seed) {}

  std::vector<Hypothesis> decode(const EncoderInput& input, int num_hypotheses,
                                 int max_new_tokens) override;

 private:
  QgModel& model_;
  std::size_t max_input_tokens_;
  double top_p_;
  std::mt19937_64 rng_;
};

/// Encoder ids for an input (type, separators, context, history, EOS).
torch::Tensor encode_input(const QgModel& model, const EncoderInput& input,
                           std::size_t max_input_tokens);

}  // namespace mqg::nn
