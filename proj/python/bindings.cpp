#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "mqg/answerability.hpp"
#include "mqg/corpus.hpp"
#include "mqg/encoder_input.hpp"
#include "mqg/error.hpp"
#include "mqg/generator.hpp"
#include "mqg/metrics.hpp"
#include "mqg/mqs.hpp"
#include "mqg/text.hpp"

namespace py = pybind11;

namespace {

// Adapts a Python callable (EncoderInput, num_hypotheses, max_new_tokens) ->
// [(text, score), ...] to the decoder interface.
class PyDecoder : public mqg::QuestionDecoder {
 public:
  explicit PyDecoder(py::function fn) : fn_(std::move(fn)) {}

  std::vector<mqg::Hypothesis> decode(const mqg::EncoderInput& input, int num_hypotheses,
                                      int max_new_tokens) override {
    std::vector<mqg::Hypothesis> out;
    for (auto item : fn_(input, num_hypotheses, max_new_tokens)) {
      auto pair = item.cast<std::pair<std::string, double>>();
      out.push_back({pair.first, pair.second});
    }
    return out;
  }

 private:
  py::function fn_;
};

mqg::MQSBatch make_batch(const std::vector<Eigen::VectorXd>& refs, const Eigen::VectorXd& target) {
  mqg::MQSBatch b;
  for (const auto& r : refs) b.reference_reps.push_back({r});
  b.target_rep = {target};
  return b;
}

std::vector<mqg::SectionQuestions> sections_from(
    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& groups) {
  std::vector<mqg::SectionQuestions> out;
  for (const auto& [gt, gen] : groups) out.push_back({gt, gen});
  return out;
}

py::dict result_dict(const mqg::ClassificationResult& r) {
  py::dict d;
  d["label"] = std::string(mqg::to_string(r.label));
  d["best_span"] = r.best_span;
  d["cls_se"] = r.cls_se;
  d["imp_se"] = r.imp_se;
  d["a_se"] = r.a_se;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-question generation core: text, corpus, MQS loss, recursive generation, "
            "answerability decisions and metrics.";

  py::register_exception<mqg::Error>(m, "MqgError", PyExc_ValueError);

  // text / corpus
  m.def("tokenize", &mqg::text::tokenize, py::arg("text"));
  m.def("normalize_question", &mqg::text::normalize_question, py::arg("question"));
  m.def(
      "tag_question_type",
      [](const std::string& q) { return std::string(mqg::to_string(mqg::tag_question_type(q))); },
      py::arg("question"));

  py::class_<mqg::Section>(m, "Section")
      .def(py::init([](std::string story, std::string section, std::string text) {
             return mqg::Section{std::move(story), std::move(section), std::move(text)};
           }),
           py::arg("story_id"), py::arg("section_id"), py::arg("text"))
      .def_readwrite("story_id", &mqg::Section::story_id)
      .def_readwrite("section_id", &mqg::Section::section_id)
      .def_readwrite("text", &mqg::Section::text);

  py::class_<mqg::QAPair>(m, "QAPair")
      .def_readonly("story_id", &mqg::QAPair::story_id)
      .def_readonly("section_id", &mqg::QAPair::section_id)
      .def_readonly("question", &mqg::QAPair::question)
      .def_readonly("answers", &mqg::QAPair::answers)
      .def_property_readonly("answer_type", [](const mqg::QAPair& q) { return std::string(mqg::to_string(q.answer_type)); })
      .def_property_readonly("question_type", [](const mqg::QAPair& q) { return std::string(mqg::to_string(q.question_type)); });

  m.def(
      "load_corpus",
      [](const std::string& sections, const std::string& qa) {
        auto r = mqg::load_corpus(sections, qa);
        return py::make_tuple(r.corpus.sections, r.corpus.qa_pairs, r.warnings);
      },
      py::arg("sections_path"), py::arg("qa_path"),
      "Returns (sections, qa_pairs, warnings).");

  m.def(
      "preprocess",
      [](const std::vector<mqg::Section>& sections, const std::vector<mqg::QAPair>& qa,
         const std::string& mode) {
        const auto res = mqg::preprocess(sections, qa,
                                         mode == "answerability" ? mqg::PreprocessMode::Answerability
                                                                 : mqg::PreprocessMode::QG);
        py::dict rep;
        rep["input"] = res.report.input;
        rep["removed_multi_section"] = res.report.removed_multi_section;
        rep["removed_unlocatable_explicit"] = res.report.removed_unlocatable_explicit;
        rep["removed_conflicting_labels"] = res.report.removed_conflicting_labels;
        rep["explicit"] = res.report.retained_explicit;
        rep["implicit"] = res.report.retained_implicit;
        rep["total"] = res.report.retained_total();
        return py::make_tuple(res.qa_pairs, rep);
      },
      py::arg("sections"), py::arg("qa_pairs"), py::arg("mode") = "qg");

  // MQS loss
  m.def(
      "mean_pool",
      [](const Eigen::MatrixXd& states, std::size_t begin, std::size_t end) {
        return mqg::mean_pool(states, {begin, end}).vector;
      },
      py::arg("token_states"), py::arg("begin"), py::arg("end"));
  m.def("cosine_similarity", &mqg::cosine_similarity, py::arg("a"), py::arg("b"));
  m.def(
      "mqs_loss",
      [](const std::vector<Eigen::VectorXd>& refs, const Eigen::VectorXd& target) {
        return mqg::mqs_loss(make_batch(refs, target));
      },
      py::arg("references"), py::arg("target"));
  m.def(
      "mqs_loss_gradient",
      [](const std::vector<Eigen::VectorXd>& refs, const Eigen::VectorXd& target) {
        return mqg::mqs_loss_gradient(make_batch(refs, target));
      },
      py::arg("references"), py::arg("target"));
  m.def("total_loss", &mqg::total_loss, py::arg("ce"), py::arg("mqs"), py::arg("beta"));

  // recursive generation
  py::class_<mqg::EncoderInput>(m, "EncoderInput")
      .def_property_readonly("question_type", [](const mqg::EncoderInput& e) { return std::string(mqg::to_string(e.question_type)); })
      .def_readonly("context", &mqg::EncoderInput::context)
      .def_readonly("reference_questions", &mqg::EncoderInput::reference_questions)
      .def("rendered", &mqg::EncoderInput::rendered);

  m.def(
      "generate_section",
      [](const mqg::Section& section, const py::object& decoder, int n, int beam_size,
         std::optional<std::vector<std::string>> types, int max_new_tokens) {
        mqg::GenerationConfig cfg;
        cfg.questions_per_type = n;
        cfg.beam_size = beam_size;
        cfg.max_new_tokens = max_new_tokens;
        if (types) {
          cfg.types.clear();
          for (const auto& t : *types) cfg.types.push_back(mqg::parse_question_type(t));
        }
        std::vector<mqg::GeneratedQuestion> out;
        if (decoder.is_none()) {
          mqg::TemplateDecoder stub;
          out = mqg::generate_section(stub, section, cfg);
        } else {
          PyDecoder d(decoder.cast<py::function>());
          out = mqg::generate_section(d, section, cfg);
        }
        py::list rows;
        for (const auto& g : out) {
          py::dict r;
          r["question_type"] = std::string(mqg::to_string(g.question_type));
          r["iteration"] = g.iteration;
          r["beam_rank"] = g.beam_rank;
          r["text"] = g.text;
          r["fallback_duplicate"] = g.fallback_duplicate;
          rows.append(r);
        }
        return rows;
      },
      py::arg("section"), py::arg("decoder") = py::none(), py::arg("n") = 4,
      py::arg("beam_size") = 5, py::arg("types") = py::none(), py::arg("max_new_tokens") = 32,
      "decoder(encoder_input, num_hypotheses, max_new_tokens) -> [(text, score)]; "
      "None uses the built-in template decoder.");

  // answerability
  m.def(
      "classify",
      [](std::vector<double> start, std::vector<double> end, std::size_t cls_index,
         std::optional<std::size_t> imp_index, std::size_t context_begin, std::size_t context_end,
         double tau, std::size_t max_answer_length) {
        mqg::SpanScores s{std::move(start), std::move(end), cls_index, imp_index, context_begin, context_end};
        return result_dict(mqg::classify(s, {tau, max_answer_length, 20}));
      },
      py::arg("start_logits"), py::arg("end_logits"), py::arg("cls_index"), py::arg("imp_index"),
      py::arg("context_begin"), py::arg("context_end"), py::arg("tau") = 0.0,
      py::arg("max_answer_length") = 30);
  m.def(
      "lexical_scores",
      [](const std::string& question, const std::string& context) {
        mqg::LexicalSpanScorer scorer;
        auto s = scorer.score(question, context);
        py::dict d;
        d["start_logits"] = s.start_logits;
        d["end_logits"] = s.end_logits;
        d["cls_index"] = s.cls_index;
        d["imp_index"] = s.imp_index;
        d["context_begin"] = s.context_begin;
        d["context_end"] = s.context_end;
        return d;
      },
      py::arg("question"), py::arg("context"));
  m.def(
      "sweep_threshold",
      [](const std::vector<py::dict>& scores, const std::vector<double>& grid, double drop_tolerance) {
        std::vector<mqg::SpanScores> in;
        for (const auto& d : scores) {
          in.push_back({d["start_logits"].cast<std::vector<double>>(),
                        d["end_logits"].cast<std::vector<double>>(), d["cls_index"].cast<std::size_t>(),
                        d["imp_index"].cast<std::optional<std::size_t>>(),
                        d["context_begin"].cast<std::size_t>(), d["context_end"].cast<std::size_t>()});
        }
        const auto curve = mqg::sweep_threshold(in, grid, {}, drop_tolerance);
        std::vector<std::pair<double, double>> points;
        for (const auto& p : curve.points) points.emplace_back(p.tau, p.answerable_ratio);
        return py::make_tuple(points, curve.recommended_tau);
      },
      py::arg("scores"), py::arg("tau_grid"), py::arg("drop_tolerance") = 0.02,
      "Returns ([(tau, answerable_ratio)], recommended_tau).");

  // metrics
  m.def("rouge_l_f1", &mqg::rouge_l_f1, py::arg("reference"), py::arg("candidate"));
  m.def(
      "rouge_l_max", [](const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& g) {
        return mqg::rouge_l_max(sections_from(g));
      },
      py::arg("sections"), "sections: [(ground_truth, generated)]");
  m.def(
      "rouge_l_alt", [](const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>& g) {
        return mqg::rouge_l_alt(sections_from(g));
      },
      py::arg("sections"));
  m.def("self_bleu", &mqg::self_bleu, py::arg("questions"), py::arg("max_ngram") = 4);
  m.def("dedup", &mqg::dedup, py::arg("questions"));
  m.def(
      "summarize",
      [](const std::vector<std::optional<double>>& values) {
        const auto s = mqg::summarize(values);
        py::dict d;
        d["mean"] = s.mean;
        d["standard_error"] = s.standard_error;
        d["single_fold"] = s.single_fold;
        return d;
      },
      py::arg("per_fold"));
}
