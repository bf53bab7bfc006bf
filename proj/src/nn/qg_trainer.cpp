#include "mqg/nn/qg_trainer.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "mqg/config.hpp"
#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg::nn {

using nlohmann::json;

std::string_view to_string(SelectionCriterion c) {
  return c == SelectionCriterion::ValidationMqsLoss ? "validation_mqs_loss"
                                                    : "validation_total_loss";
}

SelectionCriterion parse_selection_criterion(std::string_view s) {
  if (s == "validation_mqs_loss") return SelectionCriterion::ValidationMqsLoss;
  if (s == "validation_total_loss") return SelectionCriterion::ValidationTotalLoss;
  throw Error("unknown selection criterion '" + std::string(s) + "'");
}

void TrainingObjectiveConfig::validate() const {
  if (!(beta >= 0.0)) throw Error("beta must be non-negative");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (batch_size < 1) throw Error("batch_size must be positive");
  if (epochs < 1) throw Error("epochs must be positive");
  if (max_input_tokens < 1) throw Error("max_input_tokens must be positive");
}

TrainingObjectiveConfig TrainingObjectiveConfig::from_run_config(const RunConfig& cfg) {
  TrainingObjectiveConfig c;
  c.base_checkpoint = cfg.get_string("base_checkpoint", c.base_checkpoint);
  if (cfg.has("beta")) c.beta = cfg.get_double("beta");
  if (cfg.has("learning_rate")) c.learning_rate = cfg.get_double("learning_rate");
  if (cfg.has("batch_size")) c.batch_size = static_cast<int>(cfg.get_int("batch_size"));
  if (cfg.has("epochs")) c.epochs = static_cast<int>(cfg.get_int("epochs"));
  if (cfg.has("max_input_tokens")) {
    c.max_input_tokens = static_cast<std::size_t>(cfg.get_int("max_input_tokens"));
  }
  if (cfg.has("seed")) c.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  if (cfg.has("reference_cap")) c.reference_cap = static_cast<std::size_t>(cfg.get_int("reference_cap"));
  // Without the MQS term the natural criterion is the likelihood objective.
  c.selection_criterion = cfg.has("selection_criterion")
                              ? parse_selection_criterion(cfg.get_string("selection_criterion"))
                          : c.beta > 0.0 ? SelectionCriterion::ValidationMqsLoss
                                         : SelectionCriterion::ValidationTotalLoss;
  c.model = ModelConfig::from_run_config(cfg);
  c.validate();
  return c;
}

void QgModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  torch::save(network, (dir / "model.pt").string());
  vocab.save(dir / "vocab.json");
  write_json(dir / "model.json", json{{"kind", "seq2seq"}, {"config", network->config().to_json()}});
}

QgModel QgModel::load(const std::filesystem::path& dir) {
  const auto meta = read_json(dir / "model.json");
  if (meta.value("kind", "") != "seq2seq") {
    throw Error(dir.string() + " is not a question generation checkpoint");
  }
  QgModel m;
  m.vocab = Vocabulary::load(dir / "vocab.json");
  m.network = Seq2Seq(ModelConfig::from_json(meta.at("config")));
  torch::load(m.network, (dir / "model.pt").string());
  return m;
}

std::filesystem::path resolve_checkpoint(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::is_directory(name)) return name;
  if (const char* cache = std::getenv("MQG_CACHE_DIR")) {
    fs::path p = fs::path(cache) / name;
    if (fs::is_directory(p)) return p;
  }
  throw Error("checkpoint '" + name + "' not found (searched the path and $MQG_CACHE_DIR)");
}

QgModel make_base_model(const std::string& base_checkpoint, const std::vector<std::string>& texts,
                        const ModelConfig& dims, std::uint64_t seed) {
  if (base_checkpoint != "tiny-random") return QgModel::load(resolve_checkpoint(base_checkpoint));
  auto all = texts;
  for (auto t : kWhTypes) all.emplace_back(to_string(t));
  QgModel m;
  m.vocab = Vocabulary::build(all);
  ModelConfig cfg = dims;
  cfg.vocab_size = static_cast<std::int64_t>(m.vocab.size());
  torch::manual_seed(seed);
  m.network = Seq2Seq(cfg);
  return m;
}

EncodedExample encode_example(const TrainingExample& example, const Vocabulary& vocab,
                              std::size_t max_positions) {
  if (max_positions < 4) throw Error("max_positions too small to encode an example");
  const EncoderInput input = fit_to_budget(example.input, max_positions - 1);
  EncodedExample out;
  out.source.push_back(vocab.id(std::string(to_string(input.question_type))));
  out.source.push_back(Vocabulary::kSep);
  for (auto id : vocab.encode(input.context)) out.source.push_back(id);
  for (const auto& ref : input.reference_questions) {
    out.source.push_back(Vocabulary::kSep);
    const auto ids = vocab.encode(ref);
    const std::size_t begin = out.source.size();
    out.source.insert(out.source.end(), ids.begin(), ids.end());
    if (!ids.empty()) out.reference_spans.push_back({begin, out.source.size()});
  }
  out.source.push_back(Vocabulary::kEos);
  out.target = vocab.encode(example.target);
  if (out.target.size() > max_positions - 1) out.target.resize(max_positions - 1);
  return out;
}

torch::Tensor mqs_loss_tensor(const torch::Tensor& references, const torch::Tensor& target) {
  constexpr double kEps = 1e-8;
  auto dots = torch::matmul(references, target);                   // [m]
  auto norms = references.norm(2, 1).clamp_min(kEps) * target.norm().clamp_min(kEps);
  return torch::relu(1.0 - dots / norms).mean();
}

BatchLosses compute_losses(Seq2Seq& network, const std::vector<const EncodedExample*>& batch,
                           double beta) {
  if (batch.empty()) throw Error("empty batch");
  const auto b = static_cast<std::int64_t>(batch.size());
  std::int64_t src_len = 0, tgt_len = 0;
  for (const auto* e : batch) {
    src_len = std::max<std::int64_t>(src_len, static_cast<std::int64_t>(e->source.size()));
    tgt_len = std::max<std::int64_t>(tgt_len, static_cast<std::int64_t>(e->target.size()) + 1);
  }
  auto src = torch::full({b, src_len}, Vocabulary::kPad, torch::kLong);
  auto tgt_in = torch::full({b, tgt_len}, Vocabulary::kPad, torch::kLong);
  auto labels = torch::full({b, tgt_len}, Vocabulary::kPad, torch::kLong);
  auto src_a = src.accessor<std::int64_t, 2>();
  auto in_a = tgt_in.accessor<std::int64_t, 2>();
  auto lab_a = labels.accessor<std::int64_t, 2>();
  for (std::int64_t i = 0; i < b; ++i) {
    const auto& e = *batch[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < e.source.size(); ++j) src_a[i][static_cast<std::int64_t>(j)] = e.source[j];
    in_a[i][0] = Vocabulary::kBos;
    for (std::size_t j = 0; j < e.target.size(); ++j) {
      in_a[i][static_cast<std::int64_t>(j) + 1] = e.target[j];
      lab_a[i][static_cast<std::int64_t>(j)] = e.target[j];
    }
    lab_a[i][static_cast<std::int64_t>(e.target.size())] = Vocabulary::kEos;
  }

  auto memory = network->encode(src);
  auto states = network->decode(tgt_in, memory, src);
  auto logits = network->logits(states);
  BatchLosses out;
  out.ce = torch::nn::functional::cross_entropy(
      logits.reshape({-1, logits.size(2)}), labels.reshape({-1}),
      torch::nn::functional::CrossEntropyFuncOptions().ignore_index(Vocabulary::kPad));

  std::vector<torch::Tensor> per_example;
  for (std::int64_t i = 0; i < b; ++i) {
    const auto& e = *batch[static_cast<std::size_t>(i)];
    if (e.reference_spans.empty() || e.target.empty()) continue;
    std::vector<torch::Tensor> refs;
    for (const auto& span : e.reference_spans) {
      refs.push_back(memory[i]
                         .slice(0, static_cast<std::int64_t>(span.begin),
                                static_cast<std::int64_t>(span.end))
                         .mean(0));
    }
    // Decoder positions 1..n carry the target tokens as input.
    auto target = states[i].slice(0, 1, 1 + static_cast<std::int64_t>(e.target.size())).mean(0);
    per_example.push_back(mqs_loss_tensor(torch::stack(refs), target));
  }
  out.mqs_examples = per_example.size();
  out.mqs = per_example.empty() ? torch::zeros({}) : torch::stack(per_example).mean();
  if (beta == 0.0) {
    out.mqs = out.mqs.detach();
    out.total = out.ce;
  } else {
    out.total = out.ce + beta * out.mqs;
  }
  return out;
}

void write_training_log(std::ostream& os, const std::vector<EpochLog>& log) {
  for (const auto& e : log) {
    os << json{{"epoch", e.epoch},
               {"split", e.split},
               {"ce_loss", e.ce_loss},
               {"mqs_loss", e.mqs_loss},
               {"total_loss", e.total_loss}}
              .dump()
       << '\n';
  }
}

namespace {

struct Averages {
  double ce = 0.0, mqs = 0.0;
  std::size_t batches = 0, mqs_batches = 0;

  void add(const BatchLosses& l) {
    ce += l.ce.item<double>();
    ++batches;
    if (l.mqs_examples > 0) {
      mqs += l.mqs.item<double>();
      ++mqs_batches;
    }
  }
  EpochLog log(int epoch, std::string split, double beta) const {
    const double c = batches ? ce / static_cast<double>(batches) : 0.0;
    const double m = mqs_batches ? mqs / static_cast<double>(mqs_batches) : 0.0;
    return {epoch, std::move(split), c, m, c + beta * m};
  }
};

std::vector<EncodedExample> encode_all(const std::vector<TrainingExample>& examples,
                                       const Vocabulary& vocab, std::size_t max_positions) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(encode_example(e, vocab, max_positions));
  return out;
}

}  // namespace

TrainResult train_qg(const Corpus& train, const Corpus& validation,
                     const TrainingObjectiveConfig& config,
                     const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  std::vector<std::string> texts;
  for (const Corpus* c : {&train, &validation}) {
    for (const auto& s : c->sections) texts.push_back(s.text);
    for (const auto& q : c->qa_pairs) texts.push_back(q.question);
  }
  TrainResult result;
  result.model = make_base_model(config.base_checkpoint, texts, config.model, config.seed);
  auto& net = result.model.network;
  const auto max_pos = static_cast<std::size_t>(net->config().max_positions);
  const auto budget = std::min(config.max_input_tokens, max_pos - 1);

  const auto train_examples = build_training_examples(train, budget, config.reference_cap);
  if (train_examples.empty()) throw Error("training split has no usable examples");
  const auto val_examples = build_training_examples(validation, budget, config.reference_cap);
  const auto train_enc = encode_all(train_examples, result.model.vocab, max_pos);
  const auto val_enc = encode_all(val_examples, result.model.vocab, max_pos);

  torch::manual_seed(config.seed);
  torch::optim::Adam optimizer(net->parameters(), torch::optim::AdamOptions(config.learning_rate));
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_enc.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(config.batch_size);

  double best = std::numeric_limits<double>::infinity();
  std::vector<torch::Tensor> best_state;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    net->train();
    std::shuffle(order.begin(), order.end(), rng);
    Averages train_avg;
    for (std::size_t i = 0; i < order.size(); i += bs) {
      std::vector<const EncodedExample*> batch;
      for (std::size_t j = i; j < std::min(order.size(), i + bs); ++j) batch.push_back(&train_enc[order[j]]);
      optimizer.zero_grad();
      auto losses = compute_losses(net, batch, config.beta);
      losses.total.backward();
      optimizer.step();
      train_avg.add(losses);
    }
    result.log.push_back(train_avg.log(epoch, "train", config.beta));
    if (on_epoch) on_epoch(result.log.back());

    EpochLog selection_log = result.log.back();
    if (!val_enc.empty()) {
      net->eval();
      torch::NoGradGuard guard;
      Averages val_avg;
      for (std::size_t i = 0; i < val_enc.size(); i += bs) {
        std::vector<const EncodedExample*> batch;
        for (std::size_t j = i; j < std::min(val_enc.size(), i + bs); ++j) batch.push_back(&val_enc[j]);
        val_avg.add(compute_losses(net, batch, config.beta));
      }
      result.log.push_back(val_avg.log(epoch, "validation", config.beta));
      if (on_epoch) on_epoch(result.log.back());
      selection_log = result.log.back();
    }
    const double score = config.selection_criterion == SelectionCriterion::ValidationMqsLoss
                             ? selection_log.mqs_loss
                             : selection_log.total_loss;
    if (score < best) {
      best = score;
      result.best_epoch = epoch;
      best_state = snapshot(*net);
    }
  }
  if (!best_state.empty()) restore(*net, best_state);
  net->eval();
  return result;
}

}  // namespace mqg::nn
