#include "mqg/report.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>
#include <sstream>

#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg {

using nlohmann::json;

namespace {

using SectionKey = std::pair<std::string, std::string>;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string cell(const std::optional<double>& v, int precision) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

int precision_for(std::string_view metric) {
  return metric == "rouge_l_f1" || metric == "rouge_l_alt" || metric.ends_with("per_section") ? 2
                                                                                              : 4;
}

double percent(std::size_t part, std::size_t total) {
  return total ? 100.0 * static_cast<double>(part) / static_cast<double>(total) : 0.0;
}

json counts_json(const AnswerTypeCounts& c) {
  return {{"explicit", c.explicit_count},
          {"implicit", c.implicit_count},
          {"no_answer", c.no_answer_count},
          {"total", c.total()},
          {"explicit_pct", percent(c.explicit_count, c.total())},
          {"implicit_pct", percent(c.implicit_count, c.total())},
          {"no_answer_pct", percent(c.no_answer_count, c.total())}};
}

AnswerTypeCounts counts_from_json(const json& j) {
  return {j.at("explicit").get<std::size_t>(), j.at("implicit").get<std::size_t>(),
          j.at("no_answer").get<std::size_t>()};
}

}  // namespace

AnswerTypeCounts& AnswerTypeCounts::operator+=(const AnswerTypeCounts& o) {
  explicit_count += o.explicit_count;
  implicit_count += o.implicit_count;
  no_answer_count += o.no_answer_count;
  return *this;
}

void write_classified(std::ostream& os, const std::vector<ClassifiedQuestion>& records) {
  for (const auto& r : records) {
    const auto& q = r.question;
    json rec{{"story_id", q.story_id},
             {"section_id", q.section_id},
             {"question_type", to_string(q.question_type)},
             {"iteration", q.iteration},
             {"beam_rank", q.beam_rank},
             {"text", q.text},
             {"fallback_duplicate", q.fallback_duplicate},
             {"label", to_string(r.label)},
             {"answer_text", r.answer_text},
             {"cls_se", r.cls_se},
             {"imp_se", r.imp_se},
             {"a_se", r.a_se},
             {"tau", r.tau}};
    rec["span"] = r.span_offsets ? json::array({r.span_offsets->first, r.span_offsets->second})
                                 : json(nullptr);
    os << rec.dump() << '\n';
  }
}

std::vector<ClassifiedQuestion> read_classified(std::istream& is, std::string_view name) {
  std::vector<ClassifiedQuestion> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      const auto rec = json::parse(line);
      ClassifiedQuestion r;
      r.question.story_id = rec.at("story_id").get<std::string>();
      r.question.section_id = rec.at("section_id").get<std::string>();
      r.question.question_type = parse_question_type(rec.at("question_type").get<std::string>());
      r.question.iteration = rec.value("iteration", 1);
      r.question.beam_rank = rec.value("beam_rank", 1);
      r.question.text = rec.at("text").get<std::string>();
      r.question.fallback_duplicate = rec.value("fallback_duplicate", false);
      r.label = parse_answer_label(rec.at("label").get<std::string>());
      r.answer_text = rec.value("answer_text", "");
      auto num = [&](const char* k) {
        auto it = rec.find(k);
        return it == rec.end() || it->is_null() ? 0.0 : it->get<double>();
      };
      r.cls_se = num("cls_se");
      r.imp_se = num("imp_se");
      r.a_se = num("a_se");
      r.tau = num("tau");
      if (auto it = rec.find("span"); it != rec.end() && it->is_array() && it->size() == 2) {
        r.span_offsets = std::make_pair((*it)[0].get<std::size_t>(), (*it)[1].get<std::size_t>());
      }
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error(std::string(name) + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string_view to_string(SelfBleuScope s) {
  return s == SelfBleuScope::PerSection ? "per_section" : "per_section_per_type";
}

SelfBleuScope parse_self_bleu_scope(std::string_view s) {
  if (s == "per_section") return SelfBleuScope::PerSection;
  if (s == "per_section_per_type") return SelfBleuScope::PerSectionPerType;
  throw Error("unknown Self-BLEU scope '" + std::string(s) + "'");
}

FoldMetrics evaluate_fold(const std::vector<ClassifiedQuestion>& classified,
                          const std::vector<QAPair>& ground_truth,
                          const EvaluationOptions& options, int fold) {
  // Sections in first-appearance order of the generated records.
  std::vector<SectionKey> order;
  std::map<SectionKey, std::vector<const ClassifiedQuestion*>> by_section;
  for (const auto& r : classified) {
    SectionKey key{r.question.story_id, r.question.section_id};
    auto [it, fresh] = by_section.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(&r);
  }

  FoldMetrics m;
  m.fold = fold;
  if (order.empty()) throw Error("no classified questions to evaluate");

  double answerable_sum = 0.0;
  std::vector<std::vector<std::string>> bleu_groups;
  for (const auto& key : order) {
    const auto& recs = by_section[key];
    std::unordered_set<std::string> seen;
    std::size_t answerable = 0;
    for (const auto* r : recs) {
      if (!seen.insert(text::normalize_question(r->question.text)).second) continue;
      switch (r->label) {
        case AnswerLabel::Explicit: ++m.answer_types.explicit_count; ++answerable; break;
        case AnswerLabel::Implicit: ++m.answer_types.implicit_count; ++answerable; break;
        case AnswerLabel::NoAnswer: ++m.answer_types.no_answer_count; break;
      }
    }
    answerable_sum += static_cast<double>(answerable);

    if (options.self_bleu_scope == SelfBleuScope::PerSection) {
      auto& g = bleu_groups.emplace_back();
      for (const auto* r : recs) g.push_back(r->question.text);
    } else {
      std::map<QuestionType, std::vector<std::string>> per_type;
      for (const auto* r : recs) per_type[r->question.question_type].push_back(r->question.text);
      for (auto& [t, g] : per_type) bleu_groups.push_back(std::move(g));
    }
  }
  const double sections = static_cast<double>(order.size());
  m.values["generated_per_section"] = static_cast<double>(classified.size()) / sections;
  m.values["answerable_per_section"] = answerable_sum / sections;
  m.values["self_bleu"] = corpus_self_bleu(bleu_groups, options.max_ngram);

  std::map<SectionKey, SectionQuestions> pairs;
  std::vector<SectionKey> gt_order;
  for (const auto& qa : ground_truth) {
    SectionKey key{qa.story_id, qa.section_id};
    auto [it, fresh] = pairs.try_emplace(key);
    if (fresh) gt_order.push_back(key);
    it->second.ground_truth.push_back(qa.question);
  }
  std::vector<SectionQuestions> sections_q;
  for (const auto& key : gt_order) {
    auto& sq = pairs[key];
    auto it = by_section.find(key);
    if (it == by_section.end()) {
      throw Error("section (" + key.first + ", " + key.second +
                  ") has ground-truth questions but no generated questions");
    }
    for (const auto* r : it->second) sq.generated.push_back(r->question.text);
    sections_q.push_back(std::move(sq));
  }
  if (sections_q.empty()) {
    m.values["rouge_l_f1"] = std::nullopt;
    m.values["rouge_l_alt"] = std::nullopt;
  } else {
    m.values["rouge_l_f1"] = rouge_l_max(sections_q);
    m.values["rouge_l_alt"] = rouge_l_alt(sections_q);
  }
  for (std::string_view name : {"bertscore_f1", "bleurt"}) {
    auto it = options.external_scorers.find(std::string(name));
    if (it == options.external_scorers.end() || !it->second.configured()) {
      m.values[std::string(name)] = std::nullopt;
      m.skipped.emplace_back(name);
      continue;
    }
    m.values[std::string(name)] =
        sections_q.empty() ? std::nullopt : external_max_match(it->second, sections_q);
  }
  return m;
}

MetricsReport aggregate(std::vector<FoldMetrics> folds, json provenance) {
  if (folds.empty()) throw Error("aggregate needs at least one fold");
  MetricsReport r;
  r.provenance = provenance.is_null() ? json::object() : std::move(provenance);
  for (auto name : kMetricNames) {
    std::vector<std::optional<double>> vals;
    bool skipped = true;
    for (const auto& f : folds) {
      auto it = f.values.find(std::string(name));
      vals.push_back(it == f.values.end() ? std::nullopt : it->second);
      skipped = skipped && std::find(f.skipped.begin(), f.skipped.end(), name) != f.skipped.end();
    }
    auto s = summarize(vals);
    s.skipped = skipped;
    r.aggregate.emplace(std::string(name), std::move(s));
  }
  for (const auto& f : folds) r.answer_types += f.answer_types;
  r.folds = std::move(folds);
  return r;
}

json to_json(const MetricsReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds) {
    json values = json::object();
    for (const auto& [k, v] : f.values) values[k] = optional_number(v);
    folds.push_back({{"fold", f.fold},
                     {"metrics", values},
                     {"skipped", f.skipped},
                     {"answer_types", counts_json(f.answer_types)}});
  }
  json agg = json::object();
  for (const auto& [k, s] : report.aggregate) {
    json per_fold = json::array();
    for (const auto& v : s.per_fold) per_fold.push_back(optional_number(v));
    agg[k] = {{"mean", optional_number(s.mean)},
              {"se", optional_number(s.standard_error)},
              {"per_fold", per_fold},
              {"single_fold", s.single_fold},
              {"status", s.skipped ? "skipped" : (s.mean ? "ok" : "undefined")}};
  }
  return {{"folds", folds},
          {"aggregate", agg},
          {"answer_types", counts_json(report.answer_types)},
          {"provenance", report.provenance}};
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  for (const auto& f : j.at("folds")) {
    FoldMetrics fm;
    fm.fold = f.at("fold").get<int>();
    for (const auto& [k, v] : f.at("metrics").items()) fm.values[k] = number_or_null(v);
    if (auto it = f.find("skipped"); it != f.end()) {
      fm.skipped = it->get<std::vector<std::string>>();
    }
    fm.answer_types = counts_from_json(f.at("answer_types"));
    r.folds.push_back(std::move(fm));
  }
  for (const auto& [k, a] : j.at("aggregate").items()) {
    MetricSummary s;
    s.mean = number_or_null(a.at("mean"));
    s.standard_error = number_or_null(a.at("se"));
    for (const auto& v : a.at("per_fold")) s.per_fold.push_back(number_or_null(v));
    s.single_fold = a.value("single_fold", false);
    s.skipped = a.value("status", "") == "skipped";
    r.aggregate.emplace(k, std::move(s));
  }
  r.answer_types = counts_from_json(j.at("answer_types"));
  r.provenance = j.value("provenance", json::object());
  return r;
}

std::string render_table(const MetricsReport& report) {
  static constexpr std::array<std::string_view, 7> kHeaders = {
      "#Gen/Sec", "#Ans/Sec", "Rouge-L F1", "Rouge-L alt", "BERTScore", "BLEURT", "Self-BLEU"};
  bool single = false;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head = {"Fold"};
  for (auto h : kHeaders) {
    head.push_back(std::string(h) + " M");
    head.push_back("SE");
  }
  rows.push_back(head);
  for (const auto& f : report.folds) {
    std::vector<std::string> row = {std::to_string(f.fold)};
    for (auto name : kMetricNames) {
      auto it = f.values.find(std::string(name));
      row.push_back(cell(it == f.values.end() ? std::nullopt : it->second, precision_for(name)));
      row.push_back("");
    }
    rows.push_back(std::move(row));
  }
  std::vector<std::string> agg = {"M/SE"};
  for (auto name : kMetricNames) {
    auto it = report.aggregate.find(std::string(name));
    if (it == report.aggregate.end() || it->second.skipped) {
      agg.push_back(it == report.aggregate.end() ? "-" : "skipped");
      agg.push_back("-");
      continue;
    }
    const auto& s = it->second;
    agg.push_back(cell(s.mean, precision_for(name)));
    std::string se = cell(s.mean ? s.standard_error : std::nullopt, precision_for(name));
    if (s.single_fold && s.mean) {
      se += "*";
      single = true;
    }
    agg.push_back(se);
  }
  rows.push_back(std::move(agg));

  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) os << "  ";
      os << rows[r][c] << std::string(width[c] - rows[r][c].size(), ' ');
    }
    os << '\n';
    if (r == 0 || r + 2 == rows.size()) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  const auto& at = report.answer_types;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "answer types: explicit %.2f%%  implicit %.2f%%  no answer %.2f%%  (total %zu)\n",
                percent(at.explicit_count, at.total()), percent(at.implicit_count, at.total()),
                percent(at.no_answer_count, at.total()), at.total());
  os << buf;
  if (single) os << "* single fold: standard error is not estimable and is shown as 0\n";
  return os.str();
}

}  // namespace mqg
