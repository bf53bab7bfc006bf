// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "mqg/answerability.hpp"
#include "mqg/corpus.hpp"
#include "mqg/encoder_input.hpp"
#include "mqg/generator.hpp"
#include "mqg/metrics.hpp"
#include "mqg/mqs.hpp"
#include "mqg/nn/decoders.hpp"
#include "mqg/nn/qg_trainer.hpp"
#include "mqg/report.hpp"
#include "mqg/text.hpp"

using namespace mqg;

namespace {

using Failures = std::vector<std::string>;

#define REQUIRE(cond, msg)                        \
  do {                                            \
    if (!(cond)) {                                \
      std::ostringstream os_;                     \
      os_ << msg;                                 \
      fails.push_back(os_.str());                 \
    }                                             \
  } while (0)

// ---- 1: MQS loss ---------------------------------------------------------

Eigen::VectorXd gaussian(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = g(rng);
  return v;
}

MQSBatch random_batch(std::mt19937_64& rng) {
  const int m = std::uniform_int_distribution<int>(1, 6)(rng);
  const int d = std::uniform_int_distribution<int>(2, 16)(rng);
  MQSBatch b;
  for (int i = 0; i < m; ++i) b.reference_reps.push_back({gaussian(rng, d)});
  b.target_rep = {gaussian(rng, d)};
  return b;
}

double cos_of(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

Failures criterion_mqs() {
  Failures fails;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  int fd_checked = 0;
  for (int t = 0; t < 1000; ++t) {
    auto b = random_batch(rng);
    const double l = mqs_loss(b);
    REQUIRE(l >= 0.0 && l <= 2.0, "batch " << t << ": loss " << l << " out of [0, 2]");

    bool all_one = true;
    for (const auto& r : b.reference_reps) all_one = all_one && cos_of(r.vector, b.target_rep.vector) >= 1 - 1e-12;
    REQUIRE((l == 0.0) == all_one, "batch " << t << ": zero/all-cosines-1 mismatch");

    auto perm = b;
    std::shuffle(perm.reference_reps.begin(), perm.reference_reps.end(), rng);
    REQUIRE(std::abs(mqs_loss(perm) - l) <= 1e-12, "batch " << t << ": permutation changed loss");

    auto scaled = b;
    for (auto& r : scaled.reference_reps) r.vector *= scale(rng);
    scaled.target_rep.vector *= scale(rng);
    REQUIRE(std::abs(mqs_loss(scaled) - l) <= 1e-12, "batch " << t << ": rescaling changed loss");

    bool near_kink = false;
    for (const auto& r : b.reference_reps) near_kink = near_kink || std::abs(1 - cos_of(r.vector, b.target_rep.vector)) < 1e-3;
    if (!near_kink) {
      const auto g = mqs_loss_gradient(b);
      Eigen::VectorXd fd(g.size());
      const double h = 1e-6;
      for (Eigen::Index k = 0; k < g.size(); ++k) {
        auto plus = b, minus = b;
        plus.target_rep.vector[k] += h;
        minus.target_rep.vector[k] -= h;
        fd[k] = (mqs_loss(plus) - mqs_loss(minus)) / (2 * h);
      }
      const double rel = (g - fd).norm() / std::max(g.norm(), 1e-8);
      REQUIRE(rel <= 1e-4, "batch " << t << ": gradient relative error " << rel);
      ++fd_checked;
    }
  }
  // Parallel references give exactly zero; one off-direction reference does not.
  for (int t = 0; t < 100; ++t) {
    const auto target = gaussian(rng, 8);
    MQSBatch b;
    for (int i = 0; i < 3; ++i) b.reference_reps.push_back({target * scale(rng)});
    b.target_rep = {target};
    REQUIRE(mqs_loss(b) <= 1e-15, "parallel batch " << t << " loss " << mqs_loss(b));
    b.reference_reps.push_back({gaussian(rng, 8)});
    REQUIRE(mqs_loss(b) > 0.0, "non-parallel batch " << t << " has zero loss");
  }
  REQUIRE(fd_checked > 900, "only " << fd_checked << " batches away from the kink");
  return fails;
}

// ---- 2: recursive framework ----------------------------------------------

Failures criterion_recursive() {
  Failures fails;
  const std::vector<Section> sections = {
      {"book", "1", "The fox ran to the river and met an old crane."},
      {"book", "2", "Winter came early, and the crane flew south without the fox."}};
  for (const auto& s : sections) {
    testing::CountingDecoder d;
    GenerationConfig cfg;  // n = 4, all seven types
    const auto out = generate_section(d, s, cfg);
    REQUIRE(out.size() == 28u, s.section_id << ": " << out.size() << " questions, expected 28");
    std::map<QuestionType, std::vector<std::string>> produced;
    for (const auto& q : out) produced[q.question_type].push_back(q.text);
    for (auto t : kWhTypes) REQUIRE(produced[t].size() == 4u, "type " << to_string(t) << " count");

    // Inspect what the decoder was shown: history grows by one per call and
    // only ever contains the same type's earlier outputs.
    std::map<QuestionType, std::size_t> calls;
    for (const auto& seen : d.seen) {
      const auto parsed = EncoderInput::parse(seen.rendered());
      const auto t = parsed.question_type;
      const auto k = calls[t]++;
      REQUIRE(parsed.context == s.text, "context altered in rendered input");
      REQUIRE(parsed.reference_questions.size() == k,
              to_string(t) << " call " << k << " saw " << parsed.reference_questions.size() << " references");
      for (std::size_t i = 0; i < parsed.reference_questions.size() && i < produced[t].size(); ++i) {
        REQUIRE(parsed.reference_questions[i] == produced[t][i], "history is not the type's own outputs");
      }
    }
    // Template stub, same count.
    TemplateDecoder stub;
    REQUIRE(generate_section(stub, s, cfg).size() == 28u, "template decoder count");
  }

  // Duplicate exclusion: ranked list with normalized repeats.
  testing::ScriptedDecoder ranked({"Who ran?", "who ran ?", "Who swam?", "Who hid?", "Who sang?"});
  GenerationConfig one;
  one.types = {QuestionType::Who};
  one.questions_per_type = 3;
  auto out = generate_section(ranked, sections[0], one);
  REQUIRE(out.size() == 3u, "scripted count");
  if (out.size() == 3u) {
    REQUIRE(out[0].text == "Who ran?" && out[0].beam_rank == 1, "iteration 1 pick " << out[0].text);
    REQUIRE(out[1].text == "Who swam?" && out[1].beam_rank == 3, "iteration 2 pick " << out[1].text);
    REQUIRE(out[2].text == "Who hid?" && out[2].beam_rank == 4, "iteration 3 pick " << out[2].text);
    for (const auto& q : out) REQUIRE(!q.fallback_duplicate, "unexpected fallback flag");
  }

  // Exhaustion: two distinct hypotheses, four iterations.
  testing::ScriptedDecoder small({"Who ran?", "Who swam?"});
  one.questions_per_type = 4;
  out = generate_section(small, sections[0], one);
  REQUIRE(out.size() == 4u, "exhaustion count");
  if (out.size() == 4u) {
    REQUIRE(!out[0].fallback_duplicate && !out[1].fallback_duplicate, "fresh picks flagged");
    REQUIRE(out[2].fallback_duplicate && out[3].fallback_duplicate, "fallback not flagged");
    REQUIRE(out[2].text == "Who ran?" && out[2].beam_rank == 1, "fallback is not the top hypothesis");
  }
  return fails;
}

// ---- 3: decision rule ----------------------------------------------------

// Layout: 0 = cls, 1 = imp, 2..4 = context.
SpanScores synthetic(double cls_se, double imp_se, double a_se) {
  SpanScores s;
  s.start_logits.assign(5, -100.0);
  s.end_logits.assign(5, -100.0);
  s.cls_index = 0;
  s.imp_index = 1;
  s.context_begin = 2;
  s.context_end = 5;
  s.start_logits[0] = s.end_logits[0] = cls_se / 2;
  s.start_logits[1] = s.end_logits[1] = imp_se / 2;
  s.start_logits[3] = s.end_logits[3] = a_se / 2;
  return s;
}

// The decision rule, written out directly.
AnswerLabel transcribed_rule(double cls, double imp, double a, double tau) {
  if (cls > a + tau && cls > imp + tau) return AnswerLabel::NoAnswer;
  if (imp > a) return AnswerLabel::Implicit;
  return AnswerLabel::Explicit;
}

Failures criterion_decision_rule() {
  Failures fails;
  const std::vector<double> values = {-15, -12, -11, -10.5, -10, -3, 0, 0.5, 1, 2, 4, 11, 12};
  const std::vector<double> taus = {-12, -11, -10, 0, 2};
  std::size_t cases = 0, agree = 0;
  for (double cls : values)
    for (double imp : values)
      for (double a : values)
        for (double tau : taus) {
          ++cases;
          const auto got = classify(synthetic(cls, imp, a), {tau, 30, 20}).label;
          if (got == transcribed_rule(cls, imp, a, tau)) {
            ++agree;
          } else if (fails.size() < 5) {
            fails.push_back("cls=" + std::to_string(cls) + " imp=" + std::to_string(imp) +
                            " a=" + std::to_string(a) + " tau=" + std::to_string(tau) + ": got " +
                            std::string(to_string(got)));
          }
        }
  REQUIRE(agree == cases, agree << "/" << cases << " truth-table cases agree");

  // End before start: start peaks at 4, end at 2, cls far below.
  auto s = synthetic(-50, -50, 0);
  s.start_logits.assign(5, -100.0);
  s.end_logits.assign(5, -100.0);
  s.start_logits[4] = 5;
  s.end_logits[2] = 5;
  s.start_logits[0] = s.end_logits[0] = -25;
  for (double tau : taus) {
    REQUIRE(classify(s, {tau, 30, 20}).label == AnswerLabel::NoAnswer, "end-before-start at tau " << tau);
  }

  // Sweep: ratio never rises as tau tightens (decreases); limits behave.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SpanScores> set;
    for (int i = 0; i < 50; ++i) set.push_back(synthetic(g(rng), g(rng), g(rng)));
    const auto curve = sweep_threshold(set, make_tau_grid(-15, 5, 1));
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      REQUIRE(curve.points[i - 1].answerable_ratio <= curve.points[i].answerable_ratio,
              "ratio rises when tau tightens from " << curve.points[i].tau);
    }
    const auto limits = sweep_threshold(set, {-1e9, 1e9});
    REQUIRE(limits.points.front().answerable_ratio == 0.0, "tau=-inf leaves answerable questions");
    std::size_t branch_free = 0;
    for (const auto& q : set) branch_free += classify(q, {1e9, 30, 20}).label != AnswerLabel::NoAnswer;
    REQUIRE(limits.points.back().answerable_ratio == static_cast<double>(branch_free) / 50.0,
            "tau=+inf ratio mismatch");
    REQUIRE(branch_free == 50u, "no-answer branch active at tau=+inf");
  }
  return fails;
}

// ---- 4: Self-BLEU --------------------------------------------------------

Failures criterion_self_bleu() {
  Failures fails;
  const std::vector<std::vector<std::string>> sets = {
      {"Why did the Dragon King want to capture a monkey?",
       "Why couldn't the Dragon King's servants capture a monkey?",
       "Why did the Dragon King consult his chief steward?", "Why was the Dragon King greatly puzzled?"},
      {"Why did the Dragon King want to capture a monkey?",
       "Why couldn't the Dragon King's servants capture a monkey?",
       "Why did the Dragon King consult his chief steward?",
       "How did the Dragon King consult his chief steward?"},
      {"Why did the Dragon King consult his chief?", "Why did the Dragon King consult steward?",
       "Why did the Dragon King consult his chief steward?",
       "How did the King consult his chief steward?"},
      {"Why did the Dragon King consult his chief steward?",
       "Why did the Dragon King consult his chief?",
       "Why did the Dragon King consult his chief steward?",
       "How did the Dragon King consult his chief steward?"}};
  const double published[] = {0.3150, 0.6362, 0.7830, 0.9014};
  std::vector<double> got;
  for (const auto& s : sets) got.push_back(self_bleu(s).value_or(-1));
  std::ostringstream line;
  for (std::size_t i = 0; i < got.size(); ++i) {
    line << (i ? " " : "") << got[i];
    REQUIRE(std::abs(got[i] - published[i]) <= 0.05, "set " << i << ": " << got[i] << " vs " << published[i]);
    if (i) REQUIRE(got[i - 1] < got[i], "ordering broken at set " << i);
  }
  std::cout << "  self-bleu table: " << line.str() << "\n";
  for (const auto& q : {"Who?", "Who ran?", "Why did the fox run?",
                        "Why did the Dragon King consult his chief steward?"}) {
    for (std::size_t copies = 2; copies <= 5; ++copies) {
      const auto v = self_bleu(std::vector<std::string>(copies, q));
      REQUIRE(v && std::abs(*v - 1.0) <= 1e-9, "identical group '" << q << "' x" << copies);
    }
  }
  return fails;
}

// ---- 5: Rouge-L ----------------------------------------------------------

std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
  return t[a.size()][b.size()];
}

double oracle_f1(const std::vector<std::string>& r, const std::vector<std::string>& c) {
  const double l = static_cast<double>(oracle_lcs(r, c));
  if (l == 0) return 0;
  const double p = l / static_cast<double>(c.size()), rc = l / static_cast<double>(r.size());
  return 100 * 2 * p * rc / (p + rc);
}

std::vector<std::vector<std::string>> all_sequences(std::size_t max_len) {
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  std::vector<std::vector<std::string>> out, layer = {{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto& s : layer)
      for (const auto& tok : alphabet) {
        auto e = s;
        e.push_back(tok);
        next.push_back(e);
      }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

Failures criterion_rouge() {
  Failures fails;
  std::size_t mismatches = 0, pairs = 0;
  auto compare = [&](const std::vector<std::string>& r, const std::vector<std::string>& c) {
    ++pairs;
    if (std::abs(rouge_l_f1_tokens(r, c) - oracle_f1(r, c)) > 1e-9) ++mismatches;
  };
  // Every pair with both sides up to length 5.
  const auto upto5 = all_sequences(5);
  for (const auto& r : upto5)
    for (const auto& c : upto5) compare(r, c);
  // Every sequence up to length 8 against a fixed panel of lengths 1..8, both ways.
  const auto upto8 = all_sequences(8);
  std::mt19937 rng(8);
  std::vector<std::vector<std::string>> panel;
  for (int i = 0; i < 24; ++i) panel.push_back(upto8[std::uniform_int_distribution<std::size_t>(0, upto8.size() - 1)(rng)]);
  for (std::size_t len = 1; len <= 8; ++len) panel.push_back(std::vector<std::string>(len, "a"));
  for (const auto& s : upto8)
    for (const auto& p : panel) {
      compare(p, s);
      compare(s, p);
    }
  REQUIRE(mismatches == 0, mismatches << " of " << pairs << " pairs disagree with the oracle");
  std::cout << "  rouge oracle pairs: " << pairs << "\n";

  std::size_t violations = 0;
  const std::vector<std::string> words = {"who", "what", "did", "the", "fox", "find", "why", "run"};
  for (int t = 0; t < 1000; ++t) {
    std::vector<SectionQuestions> secs(std::uniform_int_distribution<int>(1, 4)(rng));
    for (auto& s : secs) {
      const int g = std::uniform_int_distribution<int>(1, 5)(rng);
      const int c = std::uniform_int_distribution<int>(1, 6)(rng);
      for (int k = 0; k < g; ++k) s.ground_truth.push_back(testing::random_sentence(rng, 7, words));
      for (int k = 0; k < c; ++k) s.generated.push_back(testing::random_sentence(rng, 7, words));
    }
    if (rouge_l_alt(secs) > rouge_l_max(secs) + 1e-9) ++violations;
  }
  REQUIRE(violations == 0, violations << " fixtures with alt > max");
  return fails;
}

// ---- 6: end-to-end toy run ------------------------------------------------

Failures criterion_end_to_end() {
  Failures fails;
  const auto corpus = testing::toy_corpus(5, 1);
  REQUIRE(corpus.sections.size() == 5u, "fixture has " << corpus.sections.size() << " sections");
  const auto split = split_by_books(corpus, {0, {0.6, 0.2, 0.2}});
  const auto& train = split.parts[0];
  const auto& validation = split.parts[1];
  const auto& test = split.parts[2];

  nn::TrainingObjectiveConfig cfg;
  cfg.beta = 1.0;
  cfg.epochs = 30;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 4;
  cfg.max_input_tokens = 100;
  cfg.model.d_model = 32;
  cfg.model.heads = 2;
  cfg.model.feedforward = 64;
  cfg.model.encoder_layers = 1;
  cfg.model.decoder_layers = 1;
  cfg.model.max_positions = 128;
  auto trained = nn::train_qg(train, validation, cfg);
  std::vector<nn::EpochLog> train_log;
  for (const auto& e : trained.log)
    if (e.split == "train") train_log.push_back(e);
  REQUIRE(train_log.size() == 30u, "train log has " << train_log.size() << " epochs");
  if (!train_log.empty()) {
    const auto& first = train_log.front();
    const auto& last = train_log.back();
    std::cout << "  ce " << first.ce_loss << " -> " << last.ce_loss << ", mqs " << first.mqs_loss
              << " -> " << last.mqs_loss << "\n";
    REQUIRE(last.ce_loss < first.ce_loss, "CE did not decrease");
    REQUIRE(last.mqs_loss < first.mqs_loss, "MQS did not decrease");
  }

  nn::BeamSearchDecoder beam(trained.model, 100);
  LexicalSpanScorer scorer;
  auto run = [&](const GenerationConfig& gc) {
    std::vector<ClassifiedQuestion> classified;
    for (const auto& s : test.sections) {
      for (auto& g : generate_section(beam, s, gc)) {
        const auto r = classify(scorer.score(g.text, s.text), {});
        classified.push_back({g, r.label, std::nullopt, "", r.cls_se, r.imp_se, r.a_se, 0.0});
      }
    }
    return classified;
  };
  GenerationConfig gc;
  gc.max_new_tokens = 12;
  const auto classified = run(gc);
  REQUIRE(classified.size() == 28u * test.sections.size(), "generated " << classified.size());

  const auto fold = evaluate_fold(classified, test.qa_pairs, {}, 0);
  const auto report = aggregate({fold}, {{"seed", 0}});
  const auto j = to_json(report);
  const auto back = report_from_json(nlohmann::json::parse(j.dump()));
  const auto table = render_table(back);
  for (auto name : kMetricNames) {
    const std::string n(name);
    REQUIRE(j["folds"][0]["metrics"].contains(n), "fold metric " << n << " missing");
    REQUIRE(j["aggregate"].contains(n), "aggregate metric " << n << " missing");
  }
  REQUIRE(j["aggregate"]["bertscore_f1"]["status"] == "skipped", "bertscore not marked skipped");
  REQUIRE(j["folds"][0]["metrics"]["bleurt"].is_null(), "bleurt not null");
  REQUIRE(j["aggregate"]["generated_per_section"]["mean"] == 28.0, "generated per section");
  REQUIRE(j["answer_types"].contains("explicit") && j["answer_types"].contains("no_answer"),
          "answer type table missing");
  REQUIRE(table.find("skipped") != std::string::npos, "table lacks skipped marker");
  REQUIRE(table.find("single fold") != std::string::npos, "single-fold SE not flagged");

  // One question per section: Self-BLEU is undefined and must show as a hyphen.
  GenerationConfig single;
  single.types = {QuestionType::Who};
  single.questions_per_type = 1;
  single.max_new_tokens = 12;
  const auto lone = evaluate_fold(run(single), test.qa_pairs, {}, 0);
  const auto lone_report = aggregate({lone});
  const auto lj = to_json(lone_report);
  REQUIRE(lj["folds"][0]["metrics"]["self_bleu"].is_null(), "undefined Self-BLEU not null");
  REQUIRE(lj["aggregate"]["self_bleu"]["status"] == "undefined", "Self-BLEU status");
  const auto lone_table = render_table(lone_report);
  std::istringstream rows(lone_table);
  std::string row, fold_row;
  std::getline(rows, row);
  std::getline(rows, row);
  std::getline(rows, fold_row);
  std::istringstream cells(fold_row);
  std::vector<std::string> tokens;
  for (std::string c; cells >> c;) tokens.push_back(c);
  REQUIRE(!tokens.empty() && tokens.back() == "-", "Self-BLEU cell is '" << (tokens.empty() ? "" : tokens.back()) << "'");
  return fails;
}

// ---- 7: preprocessing accounting -------------------------------------------

Failures criterion_preprocess() {
  Failures fails;
  Corpus c = testing::toy_corpus(3, 2);  // 12 clean questions (6 explicit, 6 implicit)
  std::set<std::string> planted;
  auto plant = [&](QAPair q, const std::string& tag) {
    q.question = q.question + " (" + tag + ")";
    planted.insert(q.question);
    c.qa_pairs.push_back(q);
  };
  auto multi = testing::qa("b0", "s0", "Who crossed both parts?", {"the fox"});
  multi.source_section_ids = {"s0", "s1"};
  plant(multi, "multi 1");
  auto multi_imp = testing::qa("b1", "s1", "Why did it all happen?", {"fate"}, AnswerType::Implicit);
  multi_imp.source_section_ids = {"s1", "s0"};
  plant(multi_imp, "multi 2");
  plant(testing::qa("b0", "s1", "What did the fox carry?", {"a golden lantern"}), "unlocatable 1");
  plant(testing::qa("b2", "s0", "Where did the fox rest?", {"under the bridge"}), "unlocatable 2");
  auto conflict = testing::qa("b1", "s0", "Who ran to the river today?", {"the fox"});
  conflict.cross_answer_types = {AnswerType::Explicit, AnswerType::Implicit};
  plant(conflict, "conflict");
  // Implicit answers need not be locatable; this one stays.
  c.qa_pairs.push_back(testing::qa("b2", "s1", "Why was the river cold?", {"snow melt"}, AnswerType::Implicit));

  const auto r = preprocess(c.sections, c.qa_pairs, PreprocessMode::Answerability);
  REQUIRE(r.report.input == 18u, "input " << r.report.input);
  REQUIRE(r.report.removed_multi_section == 2u, "multi-section removed " << r.report.removed_multi_section);
  REQUIRE(r.report.removed_unlocatable_explicit == 2u, "unlocatable removed " << r.report.removed_unlocatable_explicit);
  REQUIRE(r.report.removed_conflicting_labels == 1u, "conflicts removed " << r.report.removed_conflicting_labels);
  REQUIRE(r.report.retained_explicit == 6u, "explicit " << r.report.retained_explicit);
  REQUIRE(r.report.retained_implicit == 7u, "implicit " << r.report.retained_implicit);
  REQUIRE(r.report.retained_total() == 13u && r.qa_pairs.size() == 13u, "total " << r.report.retained_total());
  std::set<std::string> removed;
  std::set<std::string> kept;
  for (const auto& q : r.qa_pairs) kept.insert(q.question);
  for (const auto& q : c.qa_pairs)
    if (!kept.count(q.question)) removed.insert(q.question);
  REQUIRE(removed == planted, "removed set differs from the planted violations");

  const auto twice = preprocess(c.sections, r.qa_pairs, PreprocessMode::Answerability);
  REQUIRE(twice.qa_pairs.size() == r.qa_pairs.size() && twice.report.retained_total() == twice.report.input,
          "second pass removed more questions");

  const auto qg = preprocess(c.sections, c.qa_pairs, PreprocessMode::QG);
  REQUIRE(qg.report.removed_multi_section == 2u && qg.qa_pairs.size() == 16u, "QG mode counts");
  REQUIRE(preprocess(c.sections, qg.qa_pairs, PreprocessMode::QG).qa_pairs.size() == 16u, "QG idempotence");
  std::cout << "  retained: explicit " << r.report.retained_explicit << ", implicit "
            << r.report.retained_implicit << ", total " << r.report.retained_total() << "\n";
  return fails;
}

// ---- 8: beta wiring --------------------------------------------------------

Failures criterion_beta() {
  Failures fails;
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> u(0, 20);
  for (int i = 0; i < 1000; ++i) {
    const double ce = u(rng), mqs = u(rng) / 10;
    REQUIRE(total_loss(ce, mqs, 0.0) == ce, "total_loss(" << ce << ", " << mqs << ", 0) != ce");
  }

  const auto corpus = testing::toy_corpus(2, 2);
  std::vector<std::string> texts;
  for (const auto& s : corpus.sections) texts.push_back(s.text);
  for (const auto& q : corpus.qa_pairs) texts.push_back(q.question);
  nn::ModelConfig dims;
  dims.d_model = 32;
  dims.heads = 2;
  dims.feedforward = 64;
  dims.encoder_layers = 1;
  dims.decoder_layers = 1;
  dims.max_positions = 128;
  auto model = nn::make_base_model("tiny-random", texts, dims, 3);
  std::vector<nn::EncodedExample> enc;
  for (const auto& e : build_training_examples(corpus, 100)) enc.push_back(nn::encode_example(e, model.vocab, 128));
  std::vector<const nn::EncodedExample*> batch;
  for (const auto& e : enc) batch.push_back(&e);
  auto& net = model.network;
  net->eval();

  auto grads = [&](const std::function<torch::Tensor()>& loss) {
    net->zero_grad();
    loss().backward();
    std::vector<torch::Tensor> g;
    for (auto& p : net->parameters()) g.push_back(p.grad().defined() ? p.grad().clone() : torch::zeros_like(p));
    return g;
  };
  nn::BatchLosses zero;
  const auto g_zero = grads([&] {
    zero = nn::compute_losses(net, batch, 0.0);
    return zero.total;
  });
  const auto g_ce = grads([&] { return nn::compute_losses(net, batch, 0.0).ce; });
  const auto g_one = grads([&] { return nn::compute_losses(net, batch, 1.0).total; });
  REQUIRE(!zero.mqs.requires_grad(), "MQS term still attached to the graph at beta = 0");
  REQUIRE(zero.total.item<double>() == zero.ce.item<double>(), "beta = 0 total differs from ce");
  REQUIRE(zero.mqs.item<double>() > 0.0, "MQS term is trivially zero on the fixture");
  bool same = true, differs = false;
  for (std::size_t i = 0; i < g_zero.size(); ++i) {
    same = same && torch::equal(g_zero[i], g_ce[i]);
    differs = differs || !torch::allclose(g_one[i], g_ce[i]);
  }
  REQUIRE(same, "beta = 0 gradients differ from the cross-entropy gradients");
  REQUIRE(differs, "beta = 1 gradients carry no MQS contribution");
  return fails;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Failures()>>> criteria = {
      {"MQS loss suite", criterion_mqs},
      {"recursive framework", criterion_recursive},
      {"decision rule truth table", criterion_decision_rule},
      {"Self-BLEU calibration", criterion_self_bleu},
      {"Rouge-L oracle equivalence", criterion_rouge},
      {"end-to-end toy run", criterion_end_to_end},
      {"preprocessing accounting", criterion_preprocess},
      {"beta wiring", criterion_beta}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Failures fails;
    try {
      fails = criteria[i].second();
    } catch (const std::exception& e) {
      fails.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char head[160];
    std::snprintf(head, sizeof head, "%s %d %s (%.2fs)", fails.empty() ? "PASS" : "FAIL",
                  static_cast<int>(i + 1), criteria[i].first.c_str(), secs);
    std::cout << head << "\n";
    for (std::size_t k = 0; k < fails.size() && k < 10; ++k) std::cout << "    " << fails[k] << "\n";
    failed += !fails.empty();
    std::cout.flush();
  }
  return failed ? 1 : 0;
}
