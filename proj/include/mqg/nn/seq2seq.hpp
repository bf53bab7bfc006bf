#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>
#include <torch/torch.h>

namespace mqg {
class RunConfig;
}

namespace mqg::nn {

/// Dimensions of the Transformer encoder(-decoder) backbones.
struct ModelConfig {
  std::int64_t vocab_size = 0;
  std::int64_t d_model = 64;
  std::int64_t heads = 4;
  std::int64_t feedforward = 128;
  std::int64_t encoder_layers = 2;
  std::int64_t decoder_layers = 2;
  std::int64_t max_positions = 512;
  double dropout = 0.0;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  /// Reads model_dim, model_heads, model_ff, model_layers, max_positions, dropout.
  static ModelConfig from_run_config(const RunConfig& cfg);
};

/// Token + learned position embeddings, scaled by sqrt(d).
class EmbeddingsImpl : public torch::nn::Module {
 public:
  explicit EmbeddingsImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& ids);  // [B,T] -> [B,T,D]

  torch::nn::Embedding tokens{nullptr};
  torch::nn::Embedding positions{nullptr};
  torch::nn::LayerNorm norm{nullptr};
  double scale;
};
TORCH_MODULE(Embeddings);

/// Small Transformer encoder-decoder with a tied output projection.
class Seq2SeqImpl : public torch::nn::Module {
 public:
  explicit Seq2SeqImpl(const ModelConfig& cfg);

  /// [B,S] ids -> [B,S,D] encoder states.
  torch::Tensor encode(const torch::Tensor& src);
  /// [B,T] decoder input ids -> [B,T,D] decoder states (causal).
  torch::Tensor decode(const torch::Tensor& tgt_in, const torch::Tensor& memory,
                       const torch::Tensor& src);
  torch::Tensor logits(const torch::Tensor& decoder_states);

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  Embeddings embed_{nullptr};
  torch::nn::TransformerEncoder encoder_{nullptr};
  torch::nn::TransformerDecoder decoder_{nullptr};
};
TORCH_MODULE(Seq2Seq);

/// Bidirectional encoder with start/end span heads.
class SpanEncoderImpl : public torch::nn::Module {
 public:
  explicit SpanEncoderImpl(const ModelConfig& cfg);

  /// Returns start and end logits, each [B,S].
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& ids);

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  Embeddings embed_{nullptr};
  torch::nn::TransformerEncoder encoder_{nullptr};
  torch::nn::Linear span_head_{nullptr};
};
TORCH_MODULE(SpanEncoder);

/// Key-padding mask (true at padding) for [B,S] ids.
torch::Tensor padding_mask(const torch::Tensor& ids);

/// Copies every parameter and buffer value, for in-memory best-epoch snapshots.
std::vector<torch::Tensor> snapshot(torch::nn::Module& module);
void restore(torch::nn::Module& module, const std::vector<torch::Tensor>& values);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace mqg::nn
