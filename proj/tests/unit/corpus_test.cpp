#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "mqg/corpus.hpp"
#include "mqg/error.hpp"

namespace mqg {
namespace {

using testing::qa;
using testing::toy_corpus;

LoadResult parse(const std::string& sections, const std::string& qa_lines) {
  std::istringstream s(sections), q(qa_lines);
  return parse_corpus(s, q, "sections.jsonl", "qa.jsonl");
}

const std::string kOneSection =
    R"({"story_id":"s","section_id":"1","text":"The monkey sat on a tree."})"
    "\n";

TEST(LoadCorpus, OneSectionTwoQuestions) {
  auto r = parse(kOneSection,
                 R"({"story_id":"s","section_ids":["1"],"question":"Where did the monkey sit?","answers":["on a tree"],"answer_type":"explicit"})"
                 "\n"
                 R"({"story_id":"s","section_id":"1","question":"Why did it sit","answers":["tired"],"answer_type":"implicit","question_type":"why"})"
                 "\n");
  ASSERT_EQ(r.corpus.sections.size(), 1u);
  ASSERT_EQ(r.corpus.qa_pairs.size(), 2u);
  EXPECT_EQ(r.corpus.qa_pairs[0].question_type, QuestionType::Where);
  EXPECT_EQ(r.corpus.qa_pairs[1].answer_type, AnswerType::Implicit);
  ASSERT_EQ(r.warnings.size(), 1u);  // missing '?'
  EXPECT_NE(r.warnings[0].find("qa.jsonl:2"), std::string::npos);
}

TEST(LoadCorpus, DanglingSectionNamesLine) {
  try {
    parse(kOneSection, "\n" R"({"story_id":"s","section_ids":["9"],"question":"Who?","answers":["a"],"answer_type":"explicit"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("qa.jsonl:2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("unknown section"), std::string::npos);
  }
}

TEST(LoadCorpus, EmptyQaWarns) {
  auto r = parse(kOneSection, "");
  EXPECT_EQ(r.corpus.sections.size(), 1u);
  EXPECT_TRUE(r.corpus.qa_pairs.empty());
  ASSERT_EQ(r.warnings.size(), 1u);
}

TEST(LoadCorpus, MalformedLines) {
  EXPECT_THROW(parse("{not json}\n", ""), Error);
  EXPECT_THROW(parse(R"({"story_id":"s","section_id":"1","text":"  "})", ""), Error);
  EXPECT_THROW(parse(kOneSection + kOneSection, ""), Error);
  EXPECT_THROW(parse(kOneSection, R"({"story_id":"s","section_ids":["1"],"question":"Who?","answers":[],"answer_type":"explicit"})"), Error);
  EXPECT_THROW(parse(kOneSection, R"({"story_id":"s","section_ids":["1"],"question":"Who?","answers":["a"],"answer_type":"maybe"})"), Error);
}

TEST(LoadCorpus, MissingFile) {
  EXPECT_THROW(load_corpus("/nonexistent/sections.jsonl", "/nonexistent/qa.jsonl"), Error);
}

TEST(LoadCorpus, WriteReadRoundTrip) {
  Corpus c = toy_corpus(2);
  c.qa_pairs[0].cross_answer_types = {AnswerType::Explicit, AnswerType::Implicit};
  std::ostringstream s, q;
  write_sections(s, c.sections);
  write_qa_pairs(q, c.qa_pairs);
  auto r = parse(s.str(), q.str());
  ASSERT_EQ(r.corpus.qa_pairs.size(), c.qa_pairs.size());
  for (std::size_t i = 0; i < c.qa_pairs.size(); ++i) {
    EXPECT_EQ(r.corpus.qa_pairs[i].question, c.qa_pairs[i].question);
    EXPECT_EQ(r.corpus.qa_pairs[i].answer_type, c.qa_pairs[i].answer_type);
    EXPECT_EQ(r.corpus.qa_pairs[i].cross_answer_types, c.qa_pairs[i].cross_answer_types);
  }
}

TEST(TagQuestionType, DatasetStyleExamples) {
  EXPECT_EQ(tag_question_type("Why did the Dragon King want to capture a monkey?"), QuestionType::Why);
  EXPECT_EQ(tag_question_type("What happened after John Nicholas came in sight of land?"),
            QuestionType::What);
  EXPECT_EQ(tag_question_type("Did Andrew wait?"), QuestionType::Other);
  EXPECT_EQ(tag_question_type("HOW did it end?"), QuestionType::How);
  EXPECT_EQ(tag_question_type("And then, who came?"), QuestionType::Who);
  EXPECT_EQ(tag_question_type("Somewhat whole?"), QuestionType::Other);
}

TEST(TagQuestionType, StableWhenPrefixedWithOwnWhWord) {
  std::mt19937 rng(3);
  const std::vector<std::string> words = {"did", "the", "fox", "go", "what", "when", "who", "river"};
  for (int i = 0; i < 500; ++i) {
    const auto q = testing::random_sentence(rng, 8, words) + "?";
    const auto t = tag_question_type(q);
    ASSERT_EQ(tag_question_type(q), t);
    if (t != QuestionType::Other) {
      EXPECT_EQ(tag_question_type(std::string(to_string(t)) + " " + q), t);
    }
  }
}

TEST(Preprocess, QgModeRemovesMultiSection) {
  Corpus c = toy_corpus(1);
  c.qa_pairs[0].source_section_ids = {"s0", "s1"};
  auto r = preprocess(c.sections, c.qa_pairs, PreprocessMode::QG);
  EXPECT_EQ(r.report.removed_multi_section, 1u);
  EXPECT_EQ(r.qa_pairs.size(), c.qa_pairs.size() - 1);
}

TEST(Preprocess, AnswerabilityRules) {
  Corpus c = toy_corpus(1, 1);
  c.qa_pairs.push_back(qa("b0", "s0", "What was absent?", {"a unicorn"}));
  c.qa_pairs.push_back(qa("b0", "s0", "Why was it absent?", {"a unicorn"}, AnswerType::Implicit));
  auto conflicted = qa("b0", "s0", "Who ran?", {"The  FOX"});
  conflicted.cross_answer_types = {AnswerType::Implicit};
  c.qa_pairs.push_back(conflicted);

  auto qg = preprocess(c.sections, c.qa_pairs, PreprocessMode::QG);
  EXPECT_EQ(qg.qa_pairs.size(), c.qa_pairs.size());

  auto r = preprocess(c.sections, c.qa_pairs, PreprocessMode::Answerability);
  EXPECT_EQ(r.report.removed_unlocatable_explicit, 1u);
  EXPECT_EQ(r.report.removed_conflicting_labels, 1u);
  EXPECT_EQ(r.report.retained_explicit, 1u);
  EXPECT_EQ(r.report.retained_implicit, 2u);  // the unlocatable implicit one stays
  EXPECT_EQ(r.report.retained_total(), r.qa_pairs.size());
}

TEST(Preprocess, Idempotent) {
  Corpus c = toy_corpus(3);
  c.qa_pairs[1].source_section_ids = {"s0", "s1"};
  c.qa_pairs.push_back(qa("b1", "s0", "What was absent?", {"nothing here"}));
  for (auto mode : {PreprocessMode::QG, PreprocessMode::Answerability}) {
    auto once = preprocess(c.sections, c.qa_pairs, mode);
    auto twice = preprocess(c.sections, once.qa_pairs, mode);
    ASSERT_EQ(once.qa_pairs.size(), twice.qa_pairs.size());
    for (std::size_t i = 0; i < once.qa_pairs.size(); ++i) {
      EXPECT_EQ(once.qa_pairs[i].question, twice.qa_pairs[i].question);
    }
    EXPECT_EQ(twice.report.retained_total(), twice.report.input);
  }
}

TEST(SplitByBooks, TenBooksEightOneOne) {
  const auto c = toy_corpus(10);
  const auto split = split_by_books(c, {7, {0.8, 0.1, 0.1}});
  EXPECT_EQ(split.books[0].size(), 8u);
  EXPECT_EQ(split.books[1].size(), 1u);
  EXPECT_EQ(split.books[2].size(), 1u);
}

TEST(SplitByBooks, Deterministic) {
  const auto c = toy_corpus(10);
  const auto a = split_by_books(c, {7, {0.8, 0.1, 0.1}});
  const auto b = split_by_books(c, {7, {0.8, 0.1, 0.1}});
  EXPECT_EQ(a.books, b.books);
}

TEST(SplitByBooks, TooFewBooks) {
  EXPECT_THROW(split_by_books(toy_corpus(2), {0, {0.8, 0.1, 0.1}}), Error);
  EXPECT_THROW(split_by_books(toy_corpus(5), {0, {0.8, 0.1, 0.2}}), Error);
}

TEST(SplitByBooks, PartitionPropertyRandomized) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 40)(rng);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    double a = u(rng), b = u(rng), c = u(rng);
    const double s = a + b + c;
    const std::array<double, 3> ratios = {a / s, b / s, 1.0 - a / s - b / s};
    const auto corpus = toy_corpus(n, 1);
    const auto split = split_by_books(corpus, {static_cast<std::uint64_t>(trial), ratios});

    std::multiset<std::string> seen;
    for (int p = 0; p < 3; ++p) {
      seen.insert(split.books[p].begin(), split.books[p].end());
      EXPECT_LE(std::abs(static_cast<double>(split.books[p].size()) - ratios[p] * n), 1.0 + 1e-9)
          << "n=" << n << " part " << p;
      for (const auto& qa : split.parts[p].qa_pairs) {
        EXPECT_NE(std::find(split.books[p].begin(), split.books[p].end(), qa.story_id),
                  split.books[p].end());
      }
    }
    const auto all = corpus.story_ids();
    EXPECT_EQ(std::vector<std::string>(seen.begin(), seen.end()), all);
    std::size_t qa_total = 0;
    for (const auto& part : split.parts) qa_total += part.qa_pairs.size();
    EXPECT_EQ(qa_total, corpus.qa_pairs.size());
  }
}

TEST(CrossValidation, ThreeDistinctFoldsDeterministic) {
  const auto c = toy_corpus(12);
  const auto a = make_cross_validation_splits(c, 3, 0);
  const auto b = make_cross_validation_splits(c, 3, 0);
  ASSERT_EQ(a.size(), 3u);
  for (int f = 0; f < 3; ++f) {
    EXPECT_EQ(a[f].fold, f);
    EXPECT_EQ(a[f].books, b[f].books);
  }
  EXPECT_TRUE(a[0].books != a[1].books || a[1].books != a[2].books);
  EXPECT_THROW(make_cross_validation_splits(c, 1, 0), Error);
}

TEST(SplitManifest, OneRecordPerBookPerFold) {
  const auto c = toy_corpus(10);
  const auto folds = make_cross_validation_splits(c, 2, 5);
  std::ostringstream os;
  write_split_manifest(os, folds);
  const auto text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 20);
  EXPECT_NE(text.find(R"("split":"validation")"), std::string::npos);
}

}  // namespace
}  // namespace mqg
