#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ualign/config.hpp"
#include "ualign/dataset.hpp"
#include "ualign/error.hpp"
#include "ualign/eval.hpp"
#include "ualign/pipeline.hpp"
#include "ualign/text.hpp"
#include "ualign/uncertainty.hpp"
#include "ualign/world.hpp"

namespace py = pybind11;

namespace {

ualign::RunConfig make_config(const std::string& text, const std::string& out,
                              std::optional<std::uint64_t> seed) {
  ualign::RunConfig config = ualign::RunConfig::parse(text);
  if (!out.empty()) config.out_dir = out;
  if (seed) config.seed = *seed;
  return config;
}

py::dict record_dict(const ualign::AlignRecord& r) {
  py::dict d;
  d["question_id"] = r.question_id;
  d["question"] = r.question;
  d["answers"] = r.answers;
  d["labels"] = r.labels;
  d["reference_answer"] = r.reference_answer;
  d["target_answer"] = r.target_answer;
  d["confidence"] = r.confidence;
  d["entropy"] = r.entropy;
  d["refusal_flag"] = r.refusal_flag;
  return d;
}

ualign::OutcomeCounts counts_from(const py::dict& d) {
  ualign::OutcomeCounts c;
  auto get = [&](const char* key) {
    return d.contains(key) ? d[key].cast<std::uint64_t>() : std::uint64_t{0};
  };
  c.kc = get("KC");
  c.ki = get("KI");
  c.kr = get("KR");
  c.uc = get("UC");
  c.ui = get("UI");
  c.ur = get("UR");
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Uncertainty-aware alignment pipeline (C++ core)";
  m.attr("__version__") = std::string(ualign::kVersion);

  auto base = py::register_exception<ualign::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ualign::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ualign::PrerequisiteError>(m, "PrerequisiteError", base.ptr());
  py::register_exception<ualign::UndefinedMetricError>(m, "UndefinedMetricError", base.ptr());
  py::register_exception<ualign::ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ualign::LoadError>(m, "LoadError", base.ptr());

  m.def("normalize_answer", &ualign::normalize_answer, py::arg("text"));
  m.def("prem_match", &ualign::prem_match, py::arg("answer"), py::arg("reference"));
  m.def("is_refusal", &ualign::is_refusal, py::arg("answer"),
        py::arg("refusal") = std::string(ualign::kDefaultRefusal));

  m.def("confidence", py::overload_cast<const std::vector<bool>&>(&ualign::confidence),
        py::arg("labels"));
  m.def("semantic_entropy",
        py::overload_cast<const std::vector<std::size_t>&>(&ualign::semantic_entropy),
        py::arg("cluster_sizes"));
  m.def(
      "cluster_sizes",
      [](const std::vector<std::string>& answers,
         const std::vector<std::vector<std::string>>& synonyms) {
        return ualign::cluster_semantic(answers, ualign::NormalizingOracle(synonyms)).sizes;
      },
      py::arg("answers"), py::arg("synonyms") = std::vector<std::vector<std::string>>{},
      "Semantic cluster sizes in first-occurrence order.");

  m.def(
      "auroc",
      [](const std::vector<double>& scores, const std::vector<bool>& correct) {
        if (scores.size() != correct.size()) {
          throw ualign::DomainError("scores and labels differ in length");
        }
        std::vector<ualign::ScoredPrediction> preds;
        for (std::size_t i = 0; i < scores.size(); ++i) preds.push_back({scores[i], correct[i]});
        return ualign::auroc(preds);
      },
      py::arg("scores"), py::arg("correct"));
  m.def(
      "precision", [](const py::dict& counts) { return ualign::precision(counts_from(counts)); },
      py::arg("counts"), "KC / (KC + KI + KR) from a dict of outcome counts.");
  m.def(
      "truthfulness",
      [](const py::dict& counts) { return ualign::truthfulness(counts_from(counts)); },
      py::arg("counts"), "(KC + UR) / total from a dict of outcome counts.");
  m.def(
      "categorize",
      [](bool known, const std::string& output, const std::string& reference,
         const std::string& refusal) {
        return std::string(
            ualign::outcome_name(ualign::categorize(known, output, reference, refusal)));
      },
      py::arg("known"), py::arg("output"), py::arg("reference"),
      py::arg("refusal") = std::string(ualign::kDefaultRefusal));

  m.def(
      "print_config",
      [](const std::string& text) { return ualign::RunConfig::parse(text).print_config(); },
      py::arg("text") = std::string(), "Every config key with its effective value.");
  m.def(
      "run_stage",
      [](const std::string& stage, const std::string& config_text, const std::string& out,
         std::optional<std::uint64_t> seed) {
        const auto config = make_config(config_text, out, seed);
        py::gil_scoped_release release;
        ualign::run_stage(ualign::parse_stage(stage), config);
      },
      py::arg("stage"), py::arg("config") = std::string(), py::arg("out") = std::string(),
      py::arg("seed") = py::none());
  m.def(
      "run_all",
      [](const std::string& config_text, const std::string& out,
         std::optional<std::uint64_t> seed) {
        const auto config = make_config(config_text, out, seed);
        py::gil_scoped_release release;
        ualign::run_all(config);
      },
      py::arg("config") = std::string(), py::arg("out") = std::string(),
      py::arg("seed") = py::none());

  m.def(
      "read_dataset",
      [](const std::string& path, const std::string& refusal) {
        py::list out;
        for (const auto& r : ualign::read_dataset(path, ualign::RefusalPolicy{refusal})) {
          out.append(record_dict(r));
        }
        return out;
      },
      py::arg("path"), py::arg("refusal") = std::string(ualign::kDefaultRefusal));
}
