#include "mqg/nn/decoders.hpp"

#include <algorithm>
#include <cmath>

#include "mqg/error.hpp"

namespace mqg::nn {
namespace {

struct Beam {
  std::vector<std::int64_t> ids;  // generated tokens (no BOS)
  double logprob = 0.0;
};

double normalized(double logprob, std::size_t len) {
  return logprob / static_cast<double>(std::max<std::size_t>(len, 1));
}

// Next-token log-probabilities for each prefix, [L, V].
torch::Tensor next_logprobs(Seq2Seq& net, const torch::Tensor& src, const torch::Tensor& memory,
                            const std::vector<std::vector<std::int64_t>>& prefixes, bool allow_eos) {
  const auto l = static_cast<std::int64_t>(prefixes.size());
  const auto t = static_cast<std::int64_t>(prefixes.front().size()) + 1;
  auto tgt = torch::full({l, t}, Vocabulary::kBos, torch::kLong);
  auto acc = tgt.accessor<std::int64_t, 2>();
  for (std::int64_t i = 0; i < l; ++i) {
    for (std::int64_t j = 1; j < t; ++j) acc[i][j] = prefixes[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)];
  }
  auto states = net->decode(tgt, memory.expand({l, -1, -1}), src.expand({l, -1}));
  auto logits = net->logits(states.select(1, t - 1));
  // Never emit structural symbols inside a question.
  for (auto id : {Vocabulary::kPad, Vocabulary::kBos, Vocabulary::kSep, Vocabulary::kCls,
                  Vocabulary::kImp, Vocabulary::kUnk}) {
    logits.select(1, id).fill_(-1e9);
  }
  if (!allow_eos) logits.select(1, Vocabulary::kEos).fill_(-1e9);
  return torch::log_softmax(logits, 1);
}

std::vector<Hypothesis> to_hypotheses(const QgModel& model, std::vector<std::pair<double, Beam>> done,
                                      int n) {
  std::stable_sort(done.begin(), done.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<Hypothesis> out;
  for (auto& [score, beam] : done) {
    if (static_cast<int>(out.size()) == n) break;
    out.push_back({model.vocab.decode(beam.ids), score});
  }
  return out;
}

}  // namespace

torch::Tensor encode_input(const QgModel& model, const EncoderInput& input,
                           std::size_t max_input_tokens) {
  const auto max_pos = static_cast<std::size_t>(model.network->config().max_positions);
  const auto budget = std::min(max_input_tokens ? max_input_tokens : max_pos - 1, max_pos - 1);
  TrainingExample ex{fit_to_budget(input, budget), "", "", ""};
  auto enc = encode_example(ex, model.vocab, max_pos);
  return torch::tensor(enc.source, torch::kLong).unsqueeze(0);
}

std::vector<Hypothesis> BeamSearchDecoder::decode(const EncoderInput& input, int num_hypotheses,
                                                  int max_new_tokens) {
  if (num_hypotheses < 1) throw Error("beam search needs at least one hypothesis");
  torch::NoGradGuard guard;
  auto& net = model_.network;
  net->eval();
  const auto width = static_cast<std::size_t>(num_hypotheses);
  const auto max_len = std::min<std::size_t>(
      static_cast<std::size_t>(max_new_tokens),
      static_cast<std::size_t>(net->config().max_positions) - 1);
  auto src = encode_input(model_, input, max_input_tokens_);
  auto memory = net->encode(src);

  std::vector<Beam> live{Beam{}};
  std::vector<std::pair<double, Beam>> done;
  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<std::vector<std::int64_t>> prefixes;
    for (const auto& b : live) prefixes.push_back(b.ids);
    auto logp = next_logprobs(net, src, memory, prefixes, step > 0);
    const auto k = std::min<std::int64_t>(static_cast<std::int64_t>(2 * width), logp.size(1));
    auto [vals, idx] = logp.topk(k, 1);

    struct Candidate {
      double logprob;
      std::size_t beam;
      std::int64_t token;
    };
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::int64_t j = 0; j < k; ++j) {
        cands.push_back({live[i].logprob + vals[static_cast<std::int64_t>(i)][j].item<double>(), i,
                         idx[static_cast<std::int64_t>(i)][j].item<std::int64_t>()});
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.logprob > b.logprob; });
    std::vector<Beam> next;
    for (const auto& c : cands) {
      if (next.size() == width) break;
      Beam b{live[c.beam].ids, c.logprob};
      if (c.token == Vocabulary::kEos) {
        done.emplace_back(normalized(b.logprob, b.ids.size() + 1), std::move(b));
      } else {
        b.ids.push_back(c.token);
        next.push_back(std::move(b));
      }
    }
    live = std::move(next);
    if (done.size() >= width && !live.empty()) {
      std::vector<double> scores;
      for (const auto& d : done) scores.push_back(d.first);
      std::nth_element(scores.begin(), scores.begin() + static_cast<long>(width - 1), scores.end(),
                       std::greater<>());
      const double worst_kept = scores[width - 1];
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& b : live) best_live = std::max(best_live, normalized(b.logprob, b.ids.size()));
      if (worst_kept >= best_live) break;
    }
  }
  if (done.size() < width) {
    for (auto& b : live) done.emplace_back(normalized(b.logprob, b.ids.size()), std::move(b));
  }
  return to_hypotheses(model_, std::move(done), num_hypotheses);
}

std::vector<Hypothesis> NucleusSamplingDecoder::decode(const EncoderInput& input,
                                                       int num_hypotheses, int max_new_tokens) {
  if (!(top_p_ > 0.0 && top_p_ <= 1.0)) throw Error("top_p must lie in (0, 1]");
  torch::NoGradGuard guard;
  auto& net = model_.network;
  net->eval();
  auto src = encode_input(model_, input, max_input_tokens_);
  auto memory = net->encode(src);
  const auto max_len = std::min<std::size_t>(
      static_cast<std::size_t>(max_new_tokens),
      static_cast<std::size_t>(net->config().max_positions) - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::pair<double, Beam>> done;
  for (int h = 0; h < num_hypotheses; ++h) {
    Beam b;
    bool finished = false;
    for (std::size_t step = 0; step < max_len && !finished; ++step) {
      auto logp = next_logprobs(net, src, memory, {b.ids}, step > 0)[0];
      auto [sorted, order] = logp.sort(0, /*descending=*/true);
      auto probs = sorted.exp();
      const double u = unif(rng_);
      // Sample within the smallest prefix whose mass reaches top_p.
      double mass = 0.0, nucleus = 0.0;
      std::int64_t cut = 0;
      for (; cut < probs.size(0); ++cut) {
        nucleus += probs[cut].item<double>();
        if (nucleus >= top_p_) {
          ++cut;
          break;
        }
      }
      cut = std::min<std::int64_t>(std::max<std::int64_t>(cut, 1), probs.size(0));
      std::int64_t pick = cut - 1;
      for (std::int64_t i = 0; i < cut; ++i) {
        mass += probs[i].item<double>() / nucleus;
        if (u < mass) {
          pick = i;
          break;
        }
      }
      const auto token = order[pick].item<std::int64_t>();
      b.logprob += sorted[pick].item<double>();
      if (token == Vocabulary::kEos) {
        finished = true;
      } else {
        b.ids.push_back(token);
      }
    }
    const auto len = b.ids.size() + (finished ? 1 : 0);
    done.emplace_back(normalized(b.logprob, len), std::move(b));
  }
  return to_hypotheses(model_, std::move(done), num_hypotheses);
}

}  // namespace mqg::nn
