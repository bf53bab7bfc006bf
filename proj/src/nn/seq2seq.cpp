#include "mqg/nn/seq2seq.hpp"

#include <cmath>
#include <fstream>

#include "mqg/config.hpp"
#include "mqg/error.hpp"
#include "mqg/nn/vocabulary.hpp"

namespace mqg::nn {

nlohmann::json ModelConfig::to_json() const {
  return {{"vocab_size", vocab_size},         {"d_model", d_model},
          {"heads", heads},                   {"feedforward", feedforward},
          {"encoder_layers", encoder_layers}, {"decoder_layers", decoder_layers},
          {"max_positions", max_positions},   {"dropout", dropout}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::int64_t>();
  c.d_model = j.at("d_model").get<std::int64_t>();
  c.heads = j.at("heads").get<std::int64_t>();
  c.feedforward = j.at("feedforward").get<std::int64_t>();
  c.encoder_layers = j.at("encoder_layers").get<std::int64_t>();
  c.decoder_layers = j.at("decoder_layers").get<std::int64_t>();
  c.max_positions = j.at("max_positions").get<std::int64_t>();
  c.dropout = j.value("dropout", 0.0);
  return c;
}

ModelConfig ModelConfig::from_run_config(const RunConfig& cfg) {
  ModelConfig c;
  if (cfg.has("model_dim")) c.d_model = cfg.get_int("model_dim");
  if (cfg.has("model_heads")) c.heads = cfg.get_int("model_heads");
  if (cfg.has("model_ff")) c.feedforward = cfg.get_int("model_ff");
  if (cfg.has("model_layers")) c.encoder_layers = c.decoder_layers = cfg.get_int("model_layers");
  if (cfg.has("max_positions")) c.max_positions = cfg.get_int("max_positions");
  if (cfg.has("dropout")) c.dropout = cfg.get_double("dropout");
  if (c.d_model <= 0 || c.heads <= 0 || c.d_model % c.heads != 0) {
    throw Error("model_dim must be a positive multiple of model_heads");
  }
  if (c.max_positions < 8) throw Error("max_positions must be at least 8");
  return c;
}

EmbeddingsImpl::EmbeddingsImpl(const ModelConfig& cfg)
    : scale(std::sqrt(static_cast<double>(cfg.d_model))) {
  tokens = register_module(
      "tokens", torch::nn::Embedding(torch::nn::EmbeddingOptions(cfg.vocab_size, cfg.d_model)
                                         .padding_idx(Vocabulary::kPad)));
  positions = register_module("positions", torch::nn::Embedding(cfg.max_positions, cfg.d_model));
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({cfg.d_model})));
  torch::NoGradGuard guard;
  tokens->weight.normal_(0.0, 1.0 / scale);
  tokens->weight[Vocabulary::kPad].zero_();
}

torch::Tensor EmbeddingsImpl::forward(const torch::Tensor& ids) {
  const auto len = ids.size(1);
  if (len > positions->weight.size(0)) {
    throw Error("sequence of " + std::to_string(len) + " tokens exceeds the position table");
  }
  auto pos = torch::arange(len, torch::kLong).unsqueeze(0);
  return norm(tokens(ids) * scale + positions(pos));
}

Seq2SeqImpl::Seq2SeqImpl(const ModelConfig& cfg) : config_(cfg) {
  embed_ = register_module("embed", Embeddings(cfg));
  auto enc_layer = torch::nn::TransformerEncoderLayer(
      torch::nn::TransformerEncoderLayerOptions(cfg.d_model, cfg.heads)
          .dim_feedforward(cfg.feedforward)
          .dropout(cfg.dropout));
  encoder_ = register_module(
      "encoder",
      torch::nn::TransformerEncoder(torch::nn::TransformerEncoderOptions(enc_layer, cfg.encoder_layers)));
  auto dec_layer = torch::nn::TransformerDecoderLayer(
      torch::nn::TransformerDecoderLayerOptions(cfg.d_model, cfg.heads)
          .dim_feedforward(cfg.feedforward)
          .dropout(cfg.dropout));
  decoder_ = register_module(
      "decoder",
      torch::nn::TransformerDecoder(torch::nn::TransformerDecoderOptions(dec_layer, cfg.decoder_layers)));
}

torch::Tensor Seq2SeqImpl::encode(const torch::Tensor& src) {
  auto x = embed_(src).transpose(0, 1);  // [S,B,D]
  auto out = encoder_->forward(x, /*src_mask=*/torch::Tensor(), padding_mask(src));
  return out.transpose(0, 1);
}

torch::Tensor Seq2SeqImpl::decode(const torch::Tensor& tgt_in, const torch::Tensor& memory,
                                  const torch::Tensor& src) {
  const auto t = tgt_in.size(1);
  auto causal = torch::triu(torch::full({t, t}, -std::numeric_limits<float>::infinity()), 1);
  auto y = embed_(tgt_in).transpose(0, 1);
  auto out = decoder_->forward(y, memory.transpose(0, 1), causal, /*memory_mask=*/torch::Tensor(),
                      padding_mask(tgt_in), padding_mask(src));
  return out.transpose(0, 1);
}

torch::Tensor Seq2SeqImpl::logits(const torch::Tensor& decoder_states) {
  return torch::matmul(decoder_states, embed_->tokens->weight.t());
}

SpanEncoderImpl::SpanEncoderImpl(const ModelConfig& cfg) : config_(cfg) {
  embed_ = register_module("embed", Embeddings(cfg));
  auto layer = torch::nn::TransformerEncoderLayer(
      torch::nn::TransformerEncoderLayerOptions(cfg.d_model, cfg.heads)
          .dim_feedforward(cfg.feedforward)
          .dropout(cfg.dropout));
  encoder_ = register_module(
      "encoder",
      torch::nn::TransformerEncoder(torch::nn::TransformerEncoderOptions(layer, cfg.encoder_layers)));
  span_head_ = register_module("span_head", torch::nn::Linear(cfg.d_model, 2));
}

std::pair<torch::Tensor, torch::Tensor> SpanEncoderImpl::forward(const torch::Tensor& ids) {
  auto x = embed_(ids).transpose(0, 1);
  auto h = encoder_->forward(x, torch::Tensor(), padding_mask(ids)).transpose(0, 1);
  auto logits = span_head_(h);  // [B,S,2]
  auto start = logits.select(2, 0).masked_fill(padding_mask(ids), -1e4);
  auto end = logits.select(2, 1).masked_fill(padding_mask(ids), -1e4);
  return std::make_pair(start, end);
}

torch::Tensor padding_mask(const torch::Tensor& ids) { return ids.eq(Vocabulary::kPad); }

std::vector<torch::Tensor> snapshot(torch::nn::Module& module) {
  torch::NoGradGuard guard;
  std::vector<torch::Tensor> out;
  for (const auto& p : module.parameters()) out.push_back(p.detach().clone());
  for (const auto& b : module.buffers()) out.push_back(b.detach().clone());
  return out;
}

void restore(torch::nn::Module& module, const std::vector<torch::Tensor>& values) {
  torch::NoGradGuard guard;
  std::size_t i = 0;
  for (auto& p : module.parameters()) p.copy_(values.at(i++));
  for (auto& b : module.buffers()) b.copy_(values.at(i++));
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot read " + path.string());
  return nlohmann::json::parse(is);
}

}  // namespace mqg::nn
