// mqg: command-line driver for the multi-question generation pipeline.
//
//   preprocess -> split -> train-qg -> generate -> train-answerability
//   -> sweep-threshold -> classify -> evaluate -> report
//
// Each verb reads and writes plain files and leaves a <verb>.manifest.json
// next to its outputs.

#include <CLI11.hpp>
#include <json.hpp>
#include <torch/torch.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mqg/answerability.hpp"
#include "mqg/config.hpp"
#include "mqg/corpus.hpp"
#include "mqg/error.hpp"
#include "mqg/generator.hpp"
#include "mqg/metrics.hpp"
#include "mqg/nn/decoders.hpp"
#include "mqg/nn/qg_trainer.hpp"
#include "mqg/nn/span_model.hpp"
#include "mqg/report.hpp"
#include "mqg/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flag values keyed by config key; only flags given on the command line end up
// here, so they can be layered over the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options[key] = app->add_option(flag, values[key], help);
  }

  void apply(mqg::RunConfig& cfg) const {
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
  }
};

struct Context {
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  Overrides overrides;
  std::map<std::string, std::string> defaults;
  mqg::RunConfig cfg;
  mqg::RunManifest manifest;

  void start() {
    if (!config_path.empty()) {
      require(config_path);
      cfg = mqg::RunConfig::load(config_path);
    }
    overrides.apply(cfg);
    for (const auto& [k, v] : defaults) cfg.set_default(k, v);
    manifest.command = command;
    manifest.started_at = mqg::utc_timestamp();
    manifest.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    if (!config_path.empty()) manifest.inputs.push_back(config_path);
    fs::create_directories(out_dir);
  }

  void require(const std::string& path, const std::string& what = "input") {
    if (path.empty()) throw mqg::Error("missing " + what + " path");
    if (!fs::exists(path)) throw mqg::Error(what + " not found: " + path);
  }

  void input(const std::string& path, const std::string& what = "input") {
    require(path, what);
    manifest.inputs.push_back(path);
  }

  fs::path output(const std::string& name) {
    const fs::path p = fs::path(out_dir) / name;
    manifest.outputs.push_back(p.string());
    return p;
  }

  std::ofstream open(const std::string& name) {
    const auto p = output(name);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os) throw mqg::Error("cannot write " + p.string());
    return os;
  }

  void finish() {
    manifest.config = cfg.values();
    manifest.config_hash = cfg.hash();
    manifest.finished_at = mqg::utc_timestamp();
    manifest.versions = {{"mqg", std::string(mqg::kVersion)}, {"libtorch", TORCH_VERSION}};
    manifest.write(fs::path(out_dir) / (command + ".manifest.json"));
  }
};

mqg::Corpus load(Context& ctx, const std::string& sections, const std::string& qa) {
  ctx.input(sections, "sections file");
  ctx.input(qa, "qa file");
  auto result = mqg::load_corpus(sections, qa);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  return std::move(result.corpus);
}

std::vector<mqg::Section> load_sections(Context& ctx, const std::string& sections) {
  ctx.input(sections, "sections file");
  std::ifstream s(sections);
  std::istringstream empty;
  return mqg::parse_corpus(s, empty, sections, "(none)").corpus.sections;
}

const mqg::Section& section_of(const std::vector<mqg::Section>& sections, const std::string& story,
                               const std::string& section) {
  for (const auto& s : sections) {
    if (s.story_id == story && s.section_id == section) return s;
  }
  throw mqg::Error("no section (" + story + ", " + section + ")");
}

std::unique_ptr<mqg::SpanScorer> make_scorer(const std::string& classifier) {
  if (classifier == "stub") return std::make_unique<mqg::LexicalSpanScorer>();
  return std::make_unique<mqg::nn::SpanClassifier>(
      mqg::nn::SpanClassifier::load(mqg::nn::resolve_checkpoint(classifier)));
}

std::vector<mqg::SpanScores> read_scores(Context& ctx, const std::string& path) {
  ctx.input(path, "scores file");
  std::ifstream is(path);
  std::vector<mqg::SpanScores> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (mqg::text::trim(line).empty()) continue;
    try {
      out.push_back(mqg::span_scores_from_json_line(line));
    } catch (const std::exception& e) {
      throw mqg::Error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json report_json(const mqg::PreprocessReport& r) {
  return {{"input", r.input},
          {"removed_multi_section", r.removed_multi_section},
          {"removed_unlocatable_explicit", r.removed_unlocatable_explicit},
          {"removed_conflicting_labels", r.removed_conflicting_labels},
          {"explicit", r.retained_explicit},
          {"implicit", r.retained_implicit},
          {"total", r.retained_total()}};
}

std::array<double, 3> parse_ratios(const std::string& s) {
  std::array<double, 3> r{};
  std::stringstream ss(s);
  std::string part;
  std::size_t i = 0;
  while (std::getline(ss, part, ',')) {
    if (i == 3) throw mqg::Error("ratios must have three comma-separated values");
    r[i++] = std::stod(part);
  }
  if (i != 3) throw mqg::Error("ratios must have three comma-separated values");
  return r;
}

std::vector<mqg::QuestionType> parse_types(const std::string& s) {
  std::vector<mqg::QuestionType> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    out.push_back(mqg::parse_question_type(mqg::text::trim(part)));
  }
  return out;
}

// --- verbs ---------------------------------------------------------------

struct PreprocessArgs {
  std::string sections, qa, mode = "qg";
};

void run_preprocess(Context& ctx, const PreprocessArgs& a) {
  auto corpus = load(ctx, a.sections, a.qa);
  const std::string mode = ctx.cfg.get_string("preprocess_mode", a.mode);
  const auto m = mode == "qg"              ? mqg::PreprocessMode::QG
                 : mode == "answerability" ? mqg::PreprocessMode::Answerability
                                           : throw mqg::Error("unknown preprocess mode '" + mode + "'");
  auto result = mqg::preprocess(corpus.sections, corpus.qa_pairs, m);
  corpus.qa_pairs = std::move(result.qa_pairs);
  mqg::save_corpus(corpus, ctx.output("sections.jsonl"), ctx.output("qa.jsonl"));
  const auto j = report_json(result.report);
  ctx.open("preprocess_report.json") << j.dump(2) << "\n";
  std::cout << "explicit " << result.report.retained_explicit << "  implicit "
            << result.report.retained_implicit << "  total " << result.report.retained_total()
            << "\n";
}

struct SplitArgs {
  std::string sections, qa, ratios = "0.8,0.1,0.1";
};

void run_split(Context& ctx, const SplitArgs& a) {
  const auto corpus = load(ctx, a.sections, a.qa);
  const int folds = static_cast<int>(ctx.cfg.get_int("folds"));
  const auto ratios = parse_ratios(ctx.cfg.get_string("split_ratios", a.ratios));
  std::vector<mqg::CorpusSplit> splits;
  if (folds == 1) {
    splits.push_back(mqg::split_by_books(corpus, {ctx.manifest.seed, ratios}));
  } else {
    splits = mqg::make_cross_validation_splits(corpus, folds, ctx.manifest.seed, ratios);
  }
  for (const auto& split : splits) {
    const std::string dir = "fold" + std::to_string(split.fold) + "/";
    fs::create_directories(fs::path(ctx.out_dir) / dir);
    for (std::size_t p = 0; p < 3; ++p) {
      const std::string name(mqg::kSplitNames[p]);
      mqg::save_corpus(split.parts[p], ctx.output(dir + name + "_sections.jsonl"),
                       ctx.output(dir + name + "_qa.jsonl"));
    }
  }
  auto os = ctx.open("splits.jsonl");
  mqg::write_split_manifest(os, splits);
}

struct TrainQgArgs {
  std::string data;
};

void run_train_qg(Context& ctx, const TrainQgArgs& a) {
  const fs::path d = a.data;
  const auto train = load(ctx, (d / "train_sections.jsonl").string(), (d / "train_qa.jsonl").string());
  mqg::Corpus validation;
  if (fs::exists(d / "validation_qa.jsonl")) {
    validation = load(ctx, (d / "validation_sections.jsonl").string(),
                      (d / "validation_qa.jsonl").string());
  }
  const auto config = mqg::nn::TrainingObjectiveConfig::from_run_config(ctx.cfg);
  auto result = mqg::nn::train_qg(train, validation, config, [](const mqg::nn::EpochLog& e) {
    std::cerr << "epoch " << e.epoch << " " << e.split << " ce=" << e.ce_loss
              << " mqs=" << e.mqs_loss << " total=" << e.total_loss << "\n";
  });
  result.model.save(ctx.output("model"));
  auto os = ctx.open("training_log.jsonl");
  mqg::nn::write_training_log(os, result.log);
  std::cout << "best epoch " << result.best_epoch << "\n";
}

struct GenerateArgs {
  std::string sections, model, decoder = "beam", types;
  double top_p = 0.9;
};

void run_generate(Context& ctx, const GenerateArgs& a) {
  const auto sections = load_sections(ctx, a.sections);
  mqg::GenerationConfig gc;
  if (ctx.cfg.has("questions_per_type")) gc.questions_per_type = static_cast<int>(ctx.cfg.get_int("questions_per_type"));
  if (ctx.cfg.has("beam_size")) gc.beam_size = static_cast<int>(ctx.cfg.get_int("beam_size"));
  if (ctx.cfg.has("max_new_tokens")) gc.max_new_tokens = static_cast<int>(ctx.cfg.get_int("max_new_tokens"));
  gc.max_input_tokens = static_cast<std::size_t>(
      ctx.cfg.has("max_input_tokens") ? ctx.cfg.get_int("max_input_tokens") : 512);
  const std::string types = ctx.cfg.get_string("types", a.types);
  if (!types.empty()) gc.types = parse_types(types);
  gc.validate();

  const std::string kind = ctx.cfg.get_string("decoder", a.decoder);
  if (kind != "beam" && kind != "nucleus" && kind != "stub") {
    throw mqg::Error("unknown decoder '" + kind + "' (beam, nucleus, stub)");
  }
  std::unique_ptr<mqg::QuestionDecoder> decoder;
  std::unique_ptr<mqg::nn::QgModel> model;
  if (kind == "stub") {
    decoder = std::make_unique<mqg::TemplateDecoder>();
  } else {
    const std::string path = ctx.cfg.get_string("model", a.model);
    ctx.input(mqg::nn::resolve_checkpoint(path).string(), "model");
    model = std::make_unique<mqg::nn::QgModel>(mqg::nn::QgModel::load(mqg::nn::resolve_checkpoint(path)));
    const auto budget = static_cast<std::size_t>(model->network->config().max_positions);
    if (kind == "beam") {
      decoder = std::make_unique<mqg::nn::BeamSearchDecoder>(*model, budget);
    } else {
      const double top_p = ctx.cfg.has("top_p") ? ctx.cfg.get_double("top_p") : a.top_p;
      decoder = std::make_unique<mqg::nn::NucleusSamplingDecoder>(*model, budget, top_p, ctx.manifest.seed);
    }
  }
  std::vector<mqg::GeneratedQuestion> all;
  for (const auto& s : sections) {
    auto qs = mqg::generate_section(*decoder, s, gc);
    all.insert(all.end(), qs.begin(), qs.end());
  }
  auto os = ctx.open("generated.jsonl");
  mqg::write_generated(os, all);
  std::cout << all.size() << " questions for " << sections.size() << " sections\n";
}

struct TrainAnswerabilityArgs {
  std::string general_qa, sections, qa;
};

void run_train_answerability(Context& ctx, const TrainAnswerabilityArgs& a) {
  ctx.input(a.general_qa, "general QA file");
  const auto general = mqg::nn::load_squad(a.general_qa);
  const auto narrative = load(ctx, a.sections, a.qa);
  const auto config = mqg::nn::AnswerabilityTrainConfig::from_run_config(ctx.cfg);
  auto result = mqg::nn::train_two_step(general, narrative, config, ctx.out_dir,
                                        [](const mqg::nn::EpochLog& e) {
                                          std::cerr << e.split << " epoch " << e.epoch
                                                    << " loss=" << e.ce_loss << "\n";
                                        });
  ctx.output("step1");
  ctx.output("step2");
  auto log = result.step1_log;
  log.insert(log.end(), result.step2_log.begin(), result.step2_log.end());
  auto os = ctx.open("training_log.jsonl");
  mqg::nn::write_training_log(os, log);
}

struct SweepArgs {
  std::string classifier, scores, sections, qa;
  double tau_min = -15, tau_max = 5, tau_step = 1, drop_tolerance = 0.02;
};

void run_sweep(Context& ctx, const SweepArgs& a) {
  std::vector<mqg::SpanScores> scores;
  if (!a.scores.empty()) {
    scores = read_scores(ctx, a.scores);
  } else {
    if (a.classifier.empty()) throw mqg::Error("sweep-threshold needs --scores or --classifier");
    const auto corpus = load(ctx, a.sections, a.qa);
    auto scorer = make_scorer(a.classifier);
    for (const auto& q : corpus.qa_pairs) {
      const auto* s = corpus.find_section(q.story_id, q.section_id);
      if (!s) throw mqg::Error("question without section: " + q.question);
      scores.push_back(scorer->score(q.question, s->text));
    }
  }
  mqg::ClassifierConfig base;
  if (ctx.cfg.has("max_answer_length")) base.max_answer_length = static_cast<std::size_t>(ctx.cfg.get_int("max_answer_length"));
  const auto grid = mqg::make_tau_grid(a.tau_min, a.tau_max, a.tau_step);
  const auto curve = mqg::sweep_threshold(scores, grid, base, a.drop_tolerance);
  json points = json::array();
  for (const auto& p : curve.points) points.push_back({{"tau", p.tau}, {"answerable_ratio", p.answerable_ratio}});
  ctx.open("threshold_curve.json") << json{{"points", points}, {"recommended_tau", curve.recommended_tau}}.dump(2)
                                   << "\n";
  std::cout << "recommended tau " << curve.recommended_tau << "\n";
}

struct ClassifyArgs {
  std::string generated, sections, classifier = "stub", scores;
};

void run_classify(Context& ctx, const ClassifyArgs& a) {
  ctx.input(a.generated, "generated questions file");
  std::ifstream gs(a.generated);
  const auto generated = mqg::read_generated(gs, a.generated);
  const auto sections = load_sections(ctx, a.sections);
  mqg::ClassifierConfig cc;
  cc.tau = ctx.cfg.has("tau") ? ctx.cfg.get_double("tau") : 0.0;
  if (ctx.cfg.has("max_answer_length")) cc.max_answer_length = static_cast<std::size_t>(ctx.cfg.get_int("max_answer_length"));

  std::vector<mqg::SpanScores> given;
  std::unique_ptr<mqg::SpanScorer> scorer;
  if (!a.scores.empty()) {
    given = read_scores(ctx, a.scores);
    if (given.size() != generated.size()) {
      throw mqg::Error("scores file has " + std::to_string(given.size()) + " records for " +
                       std::to_string(generated.size()) + " questions");
    }
  } else {
    scorer = make_scorer(ctx.cfg.get_string("classifier", a.classifier));
  }

  std::vector<mqg::ClassifiedQuestion> out;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const auto& g = generated[i];
    const auto& section = section_of(sections, g.story_id, g.section_id);
    mqg::QaLayout layout;
    mqg::SpanScores s;
    if (scorer) {
      s = scorer->score(g.text, section.text, &layout);
    } else {
      s = given[i];
      layout = mqg::build_qa_input(g.text, section.text, s.imp_index.has_value(), s.start_logits.size());
      if (layout.context_begin != s.context_begin || layout.context_end != s.context_end) {
        layout.context_offsets.clear();  // scores were not produced on this layout
      }
    }
    const auto r = mqg::classify(s, cc);
    mqg::ClassifiedQuestion c{g, r.label, std::nullopt, "", r.cls_se, r.imp_se, r.a_se, cc.tau};
    if (r.label == mqg::AnswerLabel::Explicit && r.best_span && !layout.context_offsets.empty()) {
      const auto b = layout.context_offsets[r.best_span->first - layout.context_begin].first;
      const auto e = layout.context_offsets[r.best_span->second - layout.context_begin].second;
      c.span_offsets = std::make_pair(b, e);
      c.answer_text = section.text.substr(b, e - b);
    }
    out.push_back(std::move(c));
  }
  auto os = ctx.open("classified.jsonl");
  mqg::write_classified(os, out);
}

struct EvaluateArgs {
  std::vector<std::string> folds;
  std::vector<std::string> external;
  std::string scope = "per_section";
  std::string split_manifest;
};

void run_evaluate(Context& ctx, const EvaluateArgs& a) {
  if (a.folds.empty()) throw mqg::Error("evaluate needs at least one --fold directory");
  mqg::EvaluationOptions opt;
  opt.self_bleu_scope = mqg::parse_self_bleu_scope(ctx.cfg.get_string("self_bleu_scope", a.scope));
  for (const auto& e : a.external) {
    const auto eq = e.find('=');
    if (eq == std::string::npos) throw mqg::Error("--external-scorer expects name=command, got '" + e + "'");
    opt.external_scorers.emplace(e.substr(0, eq), mqg::ExternalScorer(e.substr(eq + 1)));
  }
  std::vector<mqg::FoldMetrics> folds;
  json fold_dirs = json::array();
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    const fs::path dir = a.folds[f];
    const auto classified_path = (dir / "classified.jsonl").string();
    ctx.input(classified_path, "classified file");
    std::ifstream cs(classified_path);
    const auto classified = mqg::read_classified(cs, classified_path);
    const auto gt = load(ctx, (dir / "test_sections.jsonl").string(), (dir / "test_qa.jsonl").string());
    folds.push_back(mqg::evaluate_fold(classified, gt.qa_pairs, opt, static_cast<int>(f)));
    fold_dirs.push_back(dir.string());
  }
  json provenance{{"config_hash", ctx.cfg.hash()}, {"seed", ctx.manifest.seed}, {"folds", fold_dirs}};
  if (!a.split_manifest.empty()) {
    ctx.input(a.split_manifest, "split manifest");
    json books = json::array();
    std::ifstream ms(a.split_manifest);
    std::string line;
    while (std::getline(ms, line)) {
      if (!mqg::text::trim(line).empty()) books.push_back(json::parse(line));
    }
    provenance["split_manifest"] = books;
  }
  const auto report = mqg::aggregate(std::move(folds), provenance);
  ctx.open("report.json") << mqg::to_json(report).dump(2) << "\n";
  std::cout << mqg::render_table(report);
}

struct ReportArgs {
  std::string report;
};

void run_report(Context& ctx, const ReportArgs& a) {
  ctx.input(a.report, "report file");
  std::ifstream is(a.report);
  json j;
  try {
    j = json::parse(is);
  } catch (const std::exception& e) {
    throw mqg::Error("unreadable report " + a.report + ": " + e.what());
  }
  const auto table = mqg::render_table(mqg::report_from_json(j));
  ctx.open("report.txt") << table;
  std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-question generation pipeline"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Context>> contexts;
  std::map<CLI::App*, std::function<void(Context&)>> actions;

  auto verb = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    contexts.push_back(std::make_unique<Context>());
    auto& ctx = *contexts.back();
    ctx.command = name;
    ctx.defaults["seed"] = "0";
    sub->add_option("--config", ctx.config_path, "run config file (key = value)");
    sub->add_option("--out-dir", ctx.out_dir, "output directory");
    ctx.overrides.add(sub, "--seed", "seed", "random seed");
    return std::make_pair(sub, &ctx);
  };

  PreprocessArgs pre;
  {
    auto [sub, ctx] = verb("preprocess", "apply the cleaning rules to a corpus");
    sub->add_option("--sections", pre.sections)->required();
    sub->add_option("--qa", pre.qa)->required();
    ctx->overrides.add(sub, "--mode", "preprocess_mode", "qg or answerability");
    actions[sub] = [&](Context& c) { run_preprocess(c, pre); };
  }
  SplitArgs split;
  {
    auto [sub, ctx] = verb("split", "book-level train/validation/test folds");
    sub->add_option("--sections", split.sections)->required();
    sub->add_option("--qa", split.qa)->required();
    ctx->overrides.add(sub, "--folds", "folds", "number of folds");
    ctx->overrides.add(sub, "--ratios", "split_ratios", "train,validation,test ratios");
    ctx->defaults["folds"] = "3";
    actions[sub] = [&](Context& c) { run_split(c, split); };
  }
  TrainQgArgs tq;
  {
    auto [sub, ctx] = verb("train-qg", "fine-tune the question generator");
    sub->add_option("--data", tq.data, "fold directory with train_/validation_ files")->required();
    ctx->overrides.add(sub, "--beta", "beta", "MQS loss weight");
    ctx->overrides.add(sub, "--epochs", "epochs", "training epochs");
    ctx->overrides.add(sub, "--base-checkpoint", "base_checkpoint", "tiny-random or checkpoint dir");
    actions[sub] = [&](Context& c) { run_train_qg(c, tq); };
  }
  GenerateArgs gen;
  {
    auto [sub, ctx] = verb("generate", "recursive question generation");
    sub->add_option("--sections", gen.sections)->required();
    ctx->overrides.add(sub, "--model", "model", "question generation checkpoint");
    ctx->overrides.add(sub, "--decoder", "decoder", "beam, nucleus or stub");
    ctx->overrides.add(sub, "--n-per-type", "questions_per_type", "questions per type (n)");
    ctx->overrides.add(sub, "--beam-size", "beam_size", "beam width (b)");
    ctx->overrides.add(sub, "--max-new-tokens", "max_new_tokens", "decode length limit");
    ctx->overrides.add(sub, "--types", "types", "comma-separated question types");
    ctx->overrides.add(sub, "--top-p", "top_p", "nucleus mass");
    actions[sub] = [&](Context& c) { run_generate(c, gen); };
  }
  TrainAnswerabilityArgs ta;
  {
    auto [sub, ctx] = verb("train-answerability", "two-step span classifier training");
    sub->add_option("--general-qa", ta.general_qa, "step-1 general QA JSONL")->required();
    sub->add_option("--sections", ta.sections)->required();
    sub->add_option("--qa", ta.qa, "step-2 narrative QA (answerability-preprocessed)")->required();
    ctx->overrides.add(sub, "--epochs", "epochs", "epochs per step");
    ctx->overrides.add(sub, "--base-checkpoint", "base_checkpoint", "tiny-random or checkpoint dir");
    actions[sub] = [&](Context& c) { run_train_answerability(c, ta); };
  }
  SweepArgs sw;
  {
    auto [sub, ctx] = verb("sweep-threshold", "answerable ratio over a tau grid");
    (void)ctx;
    sub->add_option("--classifier", sw.classifier, "checkpoint dir or stub");
    sub->add_option("--scores", sw.scores, "precomputed span scores JSONL");
    sub->add_option("--sections", sw.sections);
    sub->add_option("--qa", sw.qa, "ground-truth answerable questions");
    sub->add_option("--tau-min", sw.tau_min);
    sub->add_option("--tau-max", sw.tau_max);
    sub->add_option("--tau-step", sw.tau_step);
    sub->add_option("--drop-tolerance", sw.drop_tolerance);
    actions[sub] = [&](Context& c) { run_sweep(c, sw); };
  }
  ClassifyArgs cl;
  {
    auto [sub, ctx] = verb("classify", "label generated questions");
    sub->add_option("--generated", cl.generated)->required();
    sub->add_option("--sections", cl.sections)->required();
    sub->add_option("--scores", cl.scores, "precomputed span scores, one per question");
    ctx->overrides.add(sub, "--classifier", "classifier", "checkpoint dir or stub");
    ctx->overrides.add(sub, "--tau", "tau", "no-answer margin");
    actions[sub] = [&](Context& c) { run_classify(c, cl); };
  }
  EvaluateArgs ev;
  {
    auto [sub, ctx] = verb("evaluate", "metrics over folds");
    sub->add_option("--fold", ev.folds, "dir with classified.jsonl and test_*.jsonl (repeatable)");
    sub->add_option("--external-scorer", ev.external, "metric=command (repeatable)");
    sub->add_option("--split-manifest", ev.split_manifest);
    ctx->overrides.add(sub, "--self-bleu-scope", "self_bleu_scope", "per_section or per_section_per_type");
    actions[sub] = [&](Context& c) { run_evaluate(c, ev); };
  }
  ReportArgs rep;
  {
    auto [sub, ctx] = verb("report", "render a metrics report");
    (void)ctx;
    sub->add_option("--report", rep.report)->required();
    actions[sub] = [&](Context& c) { run_report(c, rep); };
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < contexts.size(); ++i) {
    auto* sub = app.get_subcommands().front();
    if (contexts[i]->command != sub->get_name()) continue;
    auto& ctx = *contexts[i];
    try {
      ctx.start();
      actions.at(sub)(ctx);
      ctx.finish();
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "mqg " << ctx.command << ": error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
