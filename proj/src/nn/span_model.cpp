#include "mqg/nn/span_model.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "mqg/config.hpp"
#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg::nn {

using nlohmann::json;

namespace {

// Token positions covering the byte range [begin, end) of the context.
std::optional<std::pair<std::int64_t, std::int64_t>> span_positions(const QaLayout& layout,
                                                                    std::size_t begin,
                                                                    std::size_t end) {
  std::optional<std::int64_t> first, last;
  for (std::size_t i = 0; i < layout.context_offsets.size(); ++i) {
    const auto [tb, te] = layout.context_offsets[i];
    if (te <= begin || tb >= end) continue;
    const auto pos = static_cast<std::int64_t>(layout.context_begin + i);
    if (!first) first = pos;
    last = pos;
  }
  if (!first) return std::nullopt;
  return std::make_pair(*first, *last);
}

torch::Tensor pad_batch(const std::vector<const SpanTarget*>& batch) {
  std::size_t len = 0;
  for (const auto* t : batch) len = std::max(len, t->ids.size());
  auto ids = torch::full({static_cast<std::int64_t>(batch.size()), static_cast<std::int64_t>(len)},
                         Vocabulary::kPad, torch::kLong);
  auto a = ids.accessor<std::int64_t, 2>();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch[i]->ids.size(); ++j) {
      a[static_cast<std::int64_t>(i)][static_cast<std::int64_t>(j)] = batch[i]->ids[j];
    }
  }
  return ids;
}

torch::Tensor span_loss(SpanEncoder& net, const std::vector<const SpanTarget*>& batch) {
  auto ids = pad_batch(batch);
  auto [start, end] = net(ids);
  std::vector<std::int64_t> s, e;
  for (const auto* t : batch) {
    s.push_back(t->start);
    e.push_back(t->end);
  }
  namespace F = torch::nn::functional;
  return (F::cross_entropy(start, torch::tensor(s)) + F::cross_entropy(end, torch::tensor(e))) / 2;
}

void run_step(SpanEncoder& net, const std::vector<SpanTarget>& targets,
              const AnswerabilityTrainConfig& config, std::mt19937_64& rng, const std::string& split,
              std::vector<EpochLog>& log, const std::function<void(const EpochLog&)>& on_epoch) {
  torch::optim::Adam optimizer(net->parameters(), torch::optim::AdamOptions(config.learning_rate));
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    net->train();
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t i = 0; i < order.size(); i += bs) {
      std::vector<const SpanTarget*> batch;
      for (std::size_t j = i; j < std::min(order.size(), i + bs); ++j) batch.push_back(&targets[order[j]]);
      optimizer.zero_grad();
      auto loss = span_loss(net, batch);
      loss.backward();
      optimizer.step();
      sum += loss.item<double>();
      ++batches;
    }
    const double mean = batches ? sum / static_cast<double>(batches) : 0.0;
    log.push_back({epoch, split, mean, 0.0, mean});
    if (on_epoch) on_epoch(log.back());
  }
  net->eval();
}

}  // namespace

std::vector<SquadRecord> load_squad(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open general QA file " + path.string());
  std::vector<SquadRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(n) + ": ";
    try {
      const auto rec = json::parse(line);
      SquadRecord r;
      r.question = rec.at("question").get<std::string>();
      r.context = rec.at("context").get<std::string>();
      r.is_impossible = rec.value("is_impossible", false);
      if (!r.is_impossible) {
        if (!rec.contains("answer_text") || !rec.contains("answer_start")) {
          throw Error("answerable record lacks answer_text/answer_start");
        }
        r.answer_text = rec.at("answer_text").get<std::string>();
        r.answer_start = rec.at("answer_start").get<std::size_t>();
        if (r.context.compare(r.answer_start, r.answer_text.size(), r.answer_text) != 0) {
          throw Error("answer_text does not occur at answer_start");
        }
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error(where + e.what());
    }
  }
  return out;
}

SpanScores SpanClassifier::score(const std::string& question, const std::string& context,
                                 QaLayout* layout_out) {
  auto layout = build_qa_input(question, context, /*with_imp=*/true,
                               std::min<std::size_t>(max_tokens, static_cast<std::size_t>(network->config().max_positions)));
  torch::NoGradGuard guard;
  network->eval();
  auto ids = torch::tensor(vocab.encode_tokens(layout.tokens), torch::kLong).unsqueeze(0);
  auto [start, end] = network(ids);
  SpanScores s;
  auto st = start[0].to(torch::kDouble).contiguous();
  auto en = end[0].to(torch::kDouble).contiguous();
  s.start_logits.assign(st.data_ptr<double>(), st.data_ptr<double>() + st.numel());
  s.end_logits.assign(en.data_ptr<double>(), en.data_ptr<double>() + en.numel());
  s.cls_index = layout.cls_index;
  s.imp_index = layout.imp_index;
  s.context_begin = layout.context_begin;
  s.context_end = layout.context_end;
  if (layout_out) *layout_out = std::move(layout);
  return s;
}

void SpanClassifier::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  torch::save(network, (dir / "model.pt").string());
  vocab.save(dir / "vocab.json");
  write_json(dir / "model.json", json{{"kind", "span_encoder"},
                                      {"config", network->config().to_json()},
                                      {"max_tokens", max_tokens}});
}

SpanClassifier SpanClassifier::load(const std::filesystem::path& dir) {
  const auto meta = read_json(dir / "model.json");
  if (meta.value("kind", "") != "span_encoder") {
    throw Error(dir.string() + " is not an answerability checkpoint");
  }
  SpanClassifier c;
  c.vocab = Vocabulary::load(dir / "vocab.json");
  c.network = SpanEncoder(ModelConfig::from_json(meta.at("config")));
  c.max_tokens = meta.value("max_tokens", std::size_t{256});
  torch::load(c.network, (dir / "model.pt").string());
  c.network->eval();
  return c;
}

void AnswerabilityTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (batch_size < 1) throw Error("batch_size must be positive");
  if (epochs < 1) throw Error("epochs must be positive");
  if (max_tokens < 4) throw Error("max_tokens must be at least 4");
}

AnswerabilityTrainConfig AnswerabilityTrainConfig::from_run_config(const RunConfig& cfg) {
  AnswerabilityTrainConfig c;
  c.base_checkpoint = cfg.get_string("base_checkpoint", c.base_checkpoint);
  if (cfg.has("learning_rate")) c.learning_rate = cfg.get_double("learning_rate");
  if (cfg.has("batch_size")) c.batch_size = static_cast<int>(cfg.get_int("batch_size"));
  if (cfg.has("epochs")) c.epochs = static_cast<int>(cfg.get_int("epochs"));
  if (cfg.has("max_input_tokens")) c.max_tokens = static_cast<std::size_t>(cfg.get_int("max_input_tokens"));
  if (cfg.has("seed")) c.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
  c.model = ModelConfig::from_run_config(cfg);
  c.validate();
  return c;
}

SpanTarget make_step1_target(const SquadRecord& record, const Vocabulary& vocab,
                             std::size_t max_tokens) {
  const auto layout = build_qa_input(record.question, record.context, false, max_tokens);
  SpanTarget t{vocab.encode_tokens(layout.tokens), static_cast<std::int64_t>(layout.cls_index),
               static_cast<std::int64_t>(layout.cls_index)};
  if (!record.is_impossible) {
    if (auto pos = span_positions(layout, record.answer_start,
                                  record.answer_start + record.answer_text.size())) {
      t.start = pos->first;
      t.end = pos->second;
    }
  }
  return t;
}

SpanTarget make_step2_target(const QAPair& qa, const Section& section, const Vocabulary& vocab,
                             std::size_t max_tokens) {
  const auto layout = build_qa_input(qa.question, section.text, true, max_tokens);
  SpanTarget t{vocab.encode_tokens(layout.tokens), static_cast<std::int64_t>(*layout.imp_index),
               static_cast<std::int64_t>(*layout.imp_index)};
  if (qa.answer_type == AnswerType::Implicit) return t;
  for (const auto& answer : qa.answers) {
    if (auto range = text::locate(section.text, answer)) {
      if (auto pos = span_positions(layout, range->first, range->second)) {
        t.start = pos->first;
        t.end = pos->second;
        return t;
      }
    }
  }
  throw Error("explicit answer of '" + qa.question + "' cannot be located in section (" +
              qa.story_id + ", " + qa.section_id + ")");
}

TwoStepResult train_two_step(const std::vector<SquadRecord>& general_qa, const Corpus& narrative,
                             const AnswerabilityTrainConfig& config,
                             const std::filesystem::path& checkpoint_dir,
                             const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (general_qa.empty()) throw Error("step-1 corpus is empty");
  if (narrative.qa_pairs.empty()) throw Error("step-2 corpus is empty");

  TwoStepResult result;
  auto& clf = result.classifier;
  if (config.base_checkpoint == "tiny-random") {
    std::vector<std::string> texts;
    for (const auto& r : general_qa) {
      texts.push_back(r.question);
      texts.push_back(r.context);
    }
    for (const auto& s : narrative.sections) texts.push_back(s.text);
    for (const auto& q : narrative.qa_pairs) texts.push_back(q.question);
    clf.vocab = Vocabulary::build(texts);
    ModelConfig dims = config.model;
    dims.vocab_size = static_cast<std::int64_t>(clf.vocab.size());
    torch::manual_seed(config.seed);
    clf.network = SpanEncoder(dims);
  } else {
    clf = SpanClassifier::load(resolve_checkpoint(config.base_checkpoint));
  }
  clf.max_tokens = std::min<std::size_t>(config.max_tokens,
                                         static_cast<std::size_t>(clf.network->config().max_positions));

  std::vector<SpanTarget> step1;
  for (const auto& r : general_qa) step1.push_back(make_step1_target(r, clf.vocab, clf.max_tokens));
  std::vector<SpanTarget> step2;
  for (const auto& qa : narrative.qa_pairs) {
    const Section* s = narrative.find_section(qa.story_id, qa.section_id);
    if (!s) throw Error("step-2 question references a missing section: " + qa.question);
    step2.push_back(make_step2_target(qa, *s, clf.vocab, clf.max_tokens));
  }

  torch::manual_seed(config.seed);
  std::mt19937_64 rng(config.seed);
  run_step(clf.network, step1, config, rng, "step1", result.step1_log, on_epoch);
  if (!checkpoint_dir.empty()) clf.save(checkpoint_dir / "step1");
  run_step(clf.network, step2, config, rng, "step2", result.step2_log, on_epoch);
  if (!checkpoint_dir.empty()) clf.save(checkpoint_dir / "step2");
  return result;
}

}  // namespace mqg::nn
