#include "mqg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "mqg/error.hpp"
#include "mqg/text.hpp"

namespace mqg {
namespace {

using NGram = std::vector<std::string>;

std::map<NGram, std::size_t> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  std::map<NGram, std::size_t> counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[NGram(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + n))];
  }
  return counts;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

void check_section(const SectionQuestions& s) {
  if (!s.ground_truth.empty() && s.generated.empty()) {
    throw Error("section has ground-truth questions but no generated questions");
  }
}

}  // namespace

std::vector<std::string> dedup(const std::vector<std::string>& questions) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& q : questions) {
    if (seen.insert(text::normalize_question(q)).second) out.push_back(q);
  }
  return out;
}

std::size_t count_answerable(const std::vector<AnswerLabel>& labels) {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](AnswerLabel l) {
    return l != AnswerLabel::NoAnswer;
  }));
}

double rouge_l_f1_tokens(const std::vector<std::string>& reference,
                         const std::vector<std::string>& candidate) {
  if (reference.empty() || candidate.empty()) throw Error("Rouge-L: empty token sequence");
  const double lcs = static_cast<double>(lcs_length(reference, candidate));
  if (lcs == 0.0) return 0.0;
  const double recall = lcs / static_cast<double>(reference.size());
  const double precision = lcs / static_cast<double>(candidate.size());
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double rouge_l_f1(std::string_view reference, std::string_view candidate) {
  return rouge_l_f1_tokens(text::tokenize(reference), text::tokenize(candidate));
}

double max_match_mean(const std::vector<SectionQuestions>& sections, const PairScore& score) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : sections) {
    check_section(s);
    for (const auto& gt : s.ground_truth) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& g : s.generated) best = std::max(best, score(gt, g));
      total += best;
      ++n;
    }
  }
  if (n == 0) throw Error("no ground-truth questions to score");
  return total / static_cast<double>(n);
}

double rouge_l_max(const std::vector<SectionQuestions>& sections) {
  return max_match_mean(sections, [](const std::string& r, const std::string& c) {
    return rouge_l_f1(r, c);
  });
}

double rouge_l_alt(const std::vector<SectionQuestions>& sections) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : sections) {
    check_section(s);
    std::vector<bool> used(s.generated.size(), false);
    for (const auto& gt : s.ground_truth) {
      ++n;
      std::optional<std::size_t> pick;
      double best = 0.0;
      for (std::size_t j = 0; j < s.generated.size(); ++j) {
        if (used[j]) continue;
        const double v = rouge_l_f1(gt, s.generated[j]);
        if (!pick || v > best) {
          pick = j;
          best = v;
        }
      }
      if (!pick) continue;
      used[*pick] = true;
      total += best;
    }
  }
  if (n == 0) throw Error("no ground-truth questions to score");
  return total / static_cast<double>(n);
}

double sentence_bleu(const std::vector<std::vector<std::string>>& references,
                     const std::vector<std::string>& hypothesis, int max_ngram, double epsilon) {
  if (references.empty()) throw Error("BLEU needs at least one reference");
  if (max_ngram < 1) throw Error("BLEU max n-gram order must be positive");
  if (hypothesis.empty()) return 0.0;
  // Orders longer than the hypothesis have no n-grams and are left out.
  const int orders = std::min<int>(max_ngram, static_cast<int>(hypothesis.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= orders; ++n) {
    const auto nn = static_cast<std::size_t>(n);
    const auto hyp = ngram_counts(hypothesis, nn);
    std::map<NGram, std::size_t> max_ref;
    for (const auto& r : references) {
      for (const auto& [g, c] : ngram_counts(r, nn)) max_ref[g] = std::max(max_ref[g], c);
    }
    std::size_t matched = 0, total = 0;
    for (const auto& [g, c] : hyp) {
      total += c;
      if (auto it = max_ref.find(g); it != max_ref.end()) matched += std::min(c, it->second);
    }
    const double denom = static_cast<double>(std::max<std::size_t>(total, 1));
    const double p = matched > 0 ? static_cast<double>(matched) / denom : epsilon / denom;
    log_sum += std::log(p);
  }
  const auto hyp_len = hypothesis.size();
  std::size_t closest = references.front().size();
  for (const auto& r : references) {
    const auto d = [&](std::size_t len) {
      return len > hyp_len ? len - hyp_len : hyp_len - len;
    };
    if (d(r.size()) < d(closest) || (d(r.size()) == d(closest) && r.size() < closest)) {
      closest = r.size();
    }
  }
  const double bp = hyp_len > closest
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(closest) /
                                             static_cast<double>(hyp_len));
  return bp * std::exp(log_sum / orders);
}

std::optional<double> self_bleu(const std::vector<std::string>& group, int max_ngram) {
  if (group.size() < 2) return std::nullopt;
  std::vector<std::vector<std::string>> toks;
  toks.reserve(group.size());
  for (const auto& q : group) toks.push_back(text::whitespace_tokens(q));
  double sum = 0.0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    std::vector<std::vector<std::string>> refs;
    for (std::size_t j = 0; j < toks.size(); ++j) {
      if (j != i) refs.push_back(toks[j]);
    }
    sum += sentence_bleu(refs, toks[i], max_ngram);
  }
  return sum / static_cast<double>(toks.size());
}

std::optional<double> corpus_self_bleu(const std::vector<std::vector<std::string>>& groups,
                                       int max_ngram) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (auto v = self_bleu(g, max_ngram)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

MetricSummary summarize(const std::vector<std::optional<double>>& per_fold) {
  MetricSummary s;
  s.per_fold = per_fold;
  s.single_fold = per_fold.size() == 1;
  std::vector<double> vals;
  for (const auto& v : per_fold) {
    if (v) vals.push_back(*v);
  }
  if (vals.empty()) return s;
  const double k = static_cast<double>(vals.size());
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / k;
  s.mean = mean;
  if (vals.size() < 2) {
    s.standard_error = 0.0;
    return s;
  }
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  s.standard_error = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
  return s;
}

std::vector<double> ExternalScorer::score(
    const std::vector<std::pair<std::string, std::string>>& pairs) const {
  if (!configured()) throw Error("external scorer not configured");
  namespace fs = std::filesystem;
  const auto input = fs::temp_directory_path() /
                     ("mqg_scorer_" + std::to_string(std::hash<std::string>{}(command_)) + "_" +
                      std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".jsonl");
  {
    std::ofstream os(input);
    if (!os) throw Error("cannot write scorer input " + input.string());
    for (const auto& [ref, cand] : pairs) {
      os << nlohmann::json{{"reference", ref}, {"candidate", cand}}.dump() << '\n';
    }
  }
  const std::string cmd = command_ + " < '" + input.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    fs::remove(input);
    throw Error("external scorer unreachable: " + command_);
  }
  std::string output;
  char buf[4096];
  while (auto n = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
  const int status = ::pclose(pipe);
  fs::remove(input);
  if (status != 0) {
    throw Error("external scorer '" + command_ + "' exited with status " + std::to_string(status));
  }

  std::vector<double> scores;
  std::istringstream lines(output);
  std::string line;
  while (std::getline(lines, line)) {
    if (scores.size() >= pairs.size() && text::trim(line).empty()) continue;
    const auto trimmed = text::trim(line);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(trimmed, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != trimmed.size() || !std::isfinite(v)) {
      throw Error("external scorer returned malformed output for pair " +
                  std::to_string(scores.size()) + ": '" + line + "'");
    }
    scores.push_back(v);
  }
  if (scores.size() != pairs.size()) {
    throw Error("external scorer returned " + std::to_string(scores.size()) + " scores for " +
                std::to_string(pairs.size()) + " pairs (first missing pair " +
                std::to_string(scores.size()) + ")");
  }
  return scores;
}

std::optional<double> external_max_match(const ExternalScorer& scorer,
                                         const std::vector<SectionQuestions>& sections) {
  if (!scorer.configured()) return std::nullopt;
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& s : sections) {
    check_section(s);
    for (const auto& gt : s.ground_truth) {
      for (const auto& g : s.generated) pairs.emplace_back(gt, g);
    }
  }
  const auto scores = scorer.score(pairs);
  std::map<std::pair<std::string, std::string>, double> lookup;
  for (std::size_t i = 0; i < pairs.size(); ++i) lookup.emplace(pairs[i], scores[i]);
  return max_match_mean(sections, [&](const std::string& r, const std::string& c) {
    return lookup.at({r, c});
  });
}

}  // namespace mqg
