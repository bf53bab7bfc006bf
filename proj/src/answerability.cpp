#include "mqg/answerability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::size_t> top_k(const std::vector<double>& logits, std::size_t begin,
                               std::size_t end, std::size_t k) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

bool is_special(const SpanScores& s, std::size_t pos) {
  return pos == s.cls_index || (s.imp_index && pos == *s.imp_index);
}

}  // namespace

std::string_view to_string(AnswerLabel l) {
  switch (l) {
    case AnswerLabel::Explicit: return "explicit";
    case AnswerLabel::Implicit: return "implicit";
    case AnswerLabel::NoAnswer: return "no_answer";
  }
  return "no_answer";
}

AnswerLabel parse_answer_label(std::string_view s) {
  if (s == "explicit") return AnswerLabel::Explicit;
  if (s == "implicit") return AnswerLabel::Implicit;
  if (s == "no_answer") return AnswerLabel::NoAnswer;
  throw Error("unknown answer label '" + std::string(s) + "'");
}

QaLayout build_qa_input(std::string_view question, std::string_view context, bool with_imp,
                        std::size_t max_tokens) {
  if (text::trim(question).empty()) throw Error("QA input: empty question");
  if (text::trim(context).empty()) throw Error("QA input: empty context");
  QaLayout out;
  out.tokens.emplace_back(text::kCls);
  out.cls_index = 0;
  for (auto& t : text::tokenize(question)) out.tokens.push_back(std::move(t));
  out.tokens.emplace_back(text::kSep);
  if (with_imp) {
    out.imp_index = out.tokens.size();
    out.tokens.emplace_back(text::kImp);
  }
  out.context_begin = out.tokens.size();
  if (out.context_begin >= max_tokens) {
    throw Error("QA input: question needs " + std::to_string(out.context_begin) +
                " positions, leaving no room for context within " + std::to_string(max_tokens));
  }
  for (auto& t : text::tokenize_with_offsets(context)) {
    if (out.tokens.size() >= max_tokens) break;
    out.context_offsets.emplace_back(t.begin, t.end);
    out.tokens.push_back(std::move(t.text));
  }
  out.context_end = out.tokens.size();
  return out;
}

void SpanScores::validate() const {
  const auto n = start_logits.size();
  if (end_logits.size() != n) throw Error("span scores: start/end lengths differ");
  if (cls_index >= n) throw Error("span scores: cls index out of bounds");
  if (imp_index && (*imp_index >= n || *imp_index == cls_index)) {
    throw Error("span scores: invalid imp index");
  }
  if (context_begin > context_end || context_end > n) {
    throw Error("span scores: context window out of bounds");
  }
}

ClassificationResult classify(const SpanScores& s, const ClassifierConfig& config) {
  s.validate();
  if (config.max_answer_length < 1) throw Error("max_answer_length must be >= 1");
  std::vector<std::size_t> window;
  for (std::size_t p = s.context_begin; p < s.context_end; ++p) {
    if (!is_special(s, p)) window.push_back(p);
  }
  if (window.empty()) throw Error("classify: empty context window");

  ClassificationResult r;
  r.cls_se = s.start_logits[s.cls_index] + s.end_logits[s.cls_index];
  r.imp_se = s.imp_index ? s.start_logits[*s.imp_index] + s.end_logits[*s.imp_index] : kNegInf;
  r.a_se = kNegInf;

  auto best_of = [&](const std::vector<double>& v) {
    return *std::max_element(window.begin(), window.end(), [&](std::size_t a, std::size_t b) {
      return v[a] < v[b];
    });
  };
  const auto argmax_start = best_of(s.start_logits);
  const auto argmax_end = best_of(s.end_logits);

  const auto starts = top_k(s.start_logits, s.context_begin, s.context_end, config.n_best + 2);
  const auto ends = top_k(s.end_logits, s.context_begin, s.context_end, config.n_best + 2);
  std::size_t taken_s = 0;
  for (auto st : starts) {
    if (is_special(s, st)) continue;
    if (taken_s++ == config.n_best) break;
    std::size_t taken_e = 0;
    for (auto en : ends) {
      if (is_special(s, en)) continue;
      if (taken_e++ == config.n_best) break;
      if (en < st || en - st >= config.max_answer_length) continue;
      const double score = s.start_logits[st] + s.end_logits[en];
      if (score > r.a_se) {
        r.a_se = score;
        r.best_span = std::make_pair(st, en);
      }
    }
  }

  if (argmax_end < argmax_start || !r.best_span) {
    r.label = AnswerLabel::NoAnswer;
  } else if (r.cls_se > r.a_se + config.tau && r.cls_se > r.imp_se + config.tau) {
    r.label = AnswerLabel::NoAnswer;
  } else if (r.imp_se > r.a_se) {
    r.label = AnswerLabel::Implicit;
  } else {
    r.label = AnswerLabel::Explicit;
  }
  if (r.label != AnswerLabel::Explicit) r.best_span.reset();
  return r;
}

std::vector<double> make_tau_grid(double lo, double hi, double step) {
  if (!(step > 0)) throw Error("tau grid step must be positive");
  std::vector<double> grid;
  for (long i = 0;; ++i) {
    const double v = lo + static_cast<double>(i) * step;
    if (v > hi + 1e-9) break;
    grid.push_back(v);
  }
  return grid;
}

ThresholdCurve sweep_threshold(const std::vector<SpanScores>& ground_truth_scores,
                               const std::vector<double>& tau_grid, const ClassifierConfig& base,
                               double drop_tolerance) {
  if (tau_grid.empty()) throw Error("sweep_threshold: empty tau grid");
  if (!std::is_sorted(tau_grid.begin(), tau_grid.end())) {
    throw Error("sweep_threshold: tau grid must be ascending");
  }
  ThresholdCurve curve;
  for (double tau : tau_grid) {
    ClassifierConfig cfg = base;
    cfg.tau = tau;
    std::size_t answerable = 0;
    for (const auto& s : ground_truth_scores) {
      if (classify(s, cfg).label != AnswerLabel::NoAnswer) ++answerable;
    }
    const double ratio = ground_truth_scores.empty()
                             ? 0.0
                             : static_cast<double>(answerable) /
                                   static_cast<double>(ground_truth_scores.size());
    curve.points.push_back({tau, ratio});
  }
  // Lowering tau only adds no-answer decisions, so the ratio falls as tau
  // tightens. Walk from the most permissive value down and stop right before
  // the first significant drop.
  curve.recommended_tau = curve.points.front().tau;
  for (std::size_t i = curve.points.size() - 1; i > 0; --i) {
    if (curve.points[i].answerable_ratio - curve.points[i - 1].answerable_ratio >
        drop_tolerance) {
      curve.recommended_tau = curve.points[i].tau;
      break;
    }
  }
  return curve;
}

std::vector<std::string> answer_tokens(std::string_view s) {
  std::string cleaned;
  for (unsigned char c : text::to_lower(s)) {
    if (c < 0x80 && std::ispunct(c)) continue;
    cleaned.push_back(static_cast<char>(c));
  }
  std::vector<std::string> out;
  for (auto& t : text::whitespace_tokens(cleaned)) {
    if (t == "a" || t == "an" || t == "the") continue;
    out.push_back(std::move(t));
  }
  return out;
}

double token_f1(std::string_view prediction, std::string_view gold) {
  const auto p = answer_tokens(prediction);
  const auto g = answer_tokens(gold);
  if (p.empty() || g.empty()) return p == g ? 1.0 : 0.0;
  std::vector<bool> used(g.size(), false);
  std::size_t common = 0;
  for (const auto& t : p) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (!used[j] && g[j] == t) {
        used[j] = true;
        ++common;
        break;
      }
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

ClassifierEvaluation evaluate_classifier(const std::vector<LabeledPrediction>& predictions) {
  struct Acc {
    std::size_t n = 0;
    double f1 = 0, acc = 0;
  } ex, im;
  for (const auto& p : predictions) {
    if (p.gold_type == AnswerType::Implicit) {
      ++im.n;
      const double hit = p.predicted == AnswerLabel::Implicit ? 1.0 : 0.0;
      im.f1 += hit;
      im.acc += hit;
      continue;
    }
    ++ex.n;
    if (p.predicted != AnswerLabel::Explicit) continue;
    double best_f1 = 0.0;
    bool overlap = false;
    const auto pred = answer_tokens(p.predicted_text);
    for (const auto& g : p.gold_answers) {
      best_f1 = std::max(best_f1, token_f1(p.predicted_text, g));
      const auto gold = answer_tokens(g);
      overlap = overlap || std::any_of(pred.begin(), pred.end(), [&](const std::string& t) {
                  return std::find(gold.begin(), gold.end(), t) != gold.end();
                });
    }
    ex.f1 += best_f1;
    ex.acc += overlap ? 1.0 : 0.0;
  }
  auto pct = [](double v, std::size_t n) { return n ? 100.0 * v / static_cast<double>(n) : 0.0; };
  ClassifierEvaluation e;
  e.explicit_scores = {ex.n, pct(ex.f1, ex.n), pct(ex.acc, ex.n)};
  e.implicit_scores = {im.n, pct(im.f1, im.n), pct(im.acc, im.n)};
  e.total = {ex.n + im.n, pct(ex.f1 + im.f1, ex.n + im.n), pct(ex.acc + im.acc, ex.n + im.n)};
  return e;
}

SpanScores LexicalSpanScorer::score(const std::string& question, const std::string& context,
                                    QaLayout* layout_out) {
  auto layout = build_qa_input(question, context, true, max_tokens_);
  std::unordered_set<std::string> words;
  for (auto& t : text::tokenize(question)) {
    if (t.size() > 2) words.insert(std::move(t));
  }
  auto is_word = [&](std::size_t pos) { return words.contains(layout.tokens[pos]); };
  SpanScores s;
  s.start_logits.assign(layout.tokens.size(), -1.0);
  s.end_logits.assign(layout.tokens.size(), -1.0);
  s.cls_index = layout.cls_index;
  s.imp_index = layout.imp_index;
  s.context_begin = layout.context_begin;
  s.context_end = layout.context_end;
  bool overlap = false;
  for (std::size_t i = layout.context_begin; i < layout.context_end; ++i) {
    overlap = overlap || is_word(i);
    double hits = 0.0;
    for (std::size_t k = 1; k <= window_ && i >= layout.context_begin + k; ++k) hits += is_word(i - k);
    if (!is_word(i) && hits > 0.0) s.start_logits[i] = s.end_logits[i] = hits - 0.25;
  }
  s.start_logits[s.cls_index] = s.end_logits[s.cls_index] = cls_logit_;
  s.start_logits[*s.imp_index] = s.end_logits[*s.imp_index] = imp_logit_ + (overlap ? 0.5 : 0.0);
  if (layout_out) *layout_out = std::move(layout);
  return s;
}

void write_span_scores(std::ostream& os, const SpanScores& s) {
  json rec{{"start_logits", s.start_logits}, {"end_logits", s.end_logits},
           {"cls_index", s.cls_index},       {"context_begin", s.context_begin},
           {"context_end", s.context_end}};
  rec["imp_index"] = s.imp_index ? json(*s.imp_index) : json(nullptr);
  os << rec.dump() << '\n';
}

SpanScores span_scores_from_json_line(std::string_view line) {
  const auto rec = json::parse(line);
  SpanScores s;
  s.start_logits = rec.at("start_logits").get<std::vector<double>>();
  s.end_logits = rec.at("end_logits").get<std::vector<double>>();
  s.cls_index = rec.at("cls_index").get<std::size_t>();
  if (auto it = rec.find("imp_index"); it != rec.end() && !it->is_null()) {
    s.imp_index = it->get<std::size_t>();
  }
  s.context_begin = rec.value("context_begin", std::size_t{0});
  s.context_end = rec.value("context_end", s.start_logits.size());
  s.validate();
  return s;
}

}  // namespace mqg
