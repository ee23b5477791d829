#include "ualign/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "ualign/error.hpp"
#include "ualign/text.hpp"

namespace ualign {

std::vector<GreedyAnswer> greedy_answers(const PolicyState& policy,
                                         const std::vector<AlignRecord>& records,
                                         const BinnedEstimator& confidence_model,
                                         const BinnedEstimator& entropy_model,
                                         PolicyView view) {
  std::vector<GreedyAnswer> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const std::size_t q = policy.index_of(r.question_id);
    const Measures m = predict_uncertainty(confidence_model, entropy_model, r.question);
    const std::size_t pick =
        view == PolicyView::Current ? policy.argmax(q, m) : policy.reference_argmax(q);
    const std::string& answer = policy.questions()[q].candidates[pick];
    out.push_back({r.question_id, answer,
                   categorize(r.known(), answer, r.reference_answer,
                              policy.refusal().refusal_string),
                   m.confidence});
  }
  return out;
}

EvaluationReport summarize_answers(const std::vector<GreedyAnswer>& answers,
                                   std::string label) {
  EvaluationReport report;
  report.label = std::move(label);
  report.questions = answers.size();
  std::vector<ScoredPrediction> scored;
  for (const auto& a : answers) {
    report.counts.add(a.outcome);
    scored.push_back({a.predicted_confidence,
                      a.outcome == Outcome::KC || a.outcome == Outcome::UC});
  }
  try {
    report.precision = precision(report.counts);
  } catch (const UndefinedMetricError&) {
  }
  try {
    report.truthfulness = truthfulness(report.counts);
  } catch (const UndefinedMetricError&) {
  }
  try {
    report.auroc = auroc(scored);
  } catch (const UndefinedMetricError&) {
  }
  return report;
}

EvaluationReport evaluate_policy(const PolicyState& policy,
                                 const std::vector<AlignRecord>& records,
                                 const BinnedEstimator& confidence_model,
                                 const BinnedEstimator& entropy_model,
                                 PolicyView view, std::string label) {
  return summarize_answers(
      greedy_answers(policy, records, confidence_model, entropy_model, view),
      std::move(label));
}

bool plurality_correct_weak(const AlignRecord& record, const QASample& question) {
  if (question.tier != KnowledgeTier::WeaklyKnown) return false;
  if (!(record.confidence < 0.5)) return false;
  std::size_t correct = 0;
  std::map<std::string, std::size_t> wrong;
  for (std::size_t i = 0; i < record.answers.size(); ++i) {
    if (record.labels[i]) {
      ++correct;
    } else {
      ++wrong[normalize_answer(record.answers[i])];
    }
  }
  if (correct == 0) return false;
  return std::all_of(wrong.begin(), wrong.end(),
                     [&](const auto& kv) { return kv.second <= correct; });
}

CohortResult plurality_cohort(const PolicyState& policy,
                              const std::vector<AlignRecord>& records,
                              const std::vector<QASample>& questions,
                              const BinnedEstimator& confidence_model,
                              const BinnedEstimator& entropy_model) {
  std::unordered_map<std::string, const QASample*> by_id;
  for (const auto& q : questions) by_id.emplace(q.id, &q);
  const std::string& refusal = policy.refusal().refusal_string;
  auto correct = [&](const std::string& answer, const AlignRecord& r) {
    return !is_refusal(answer, refusal) && prem_match(answer, r.reference_answer);
  };
  CohortResult out;
  for (const auto& r : records) {
    auto it = by_id.find(r.question_id);
    if (it == by_id.end() || !plurality_correct_weak(r, *it->second)) continue;
    const std::size_t q = policy.index_of(r.question_id);
    const Measures m = predict_uncertainty(confidence_model, entropy_model, r.question);
    const auto& candidates = policy.questions()[q].candidates;
    ++out.questions;
    if (correct(candidates[policy.reference_argmax(q)], r)) ++out.initial_correct;
    if (correct(candidates[policy.argmax(q, m)], r)) ++out.aligned_correct;
  }
  return out;
}

double sample_confidence_auroc(const Generator& generator,
                               const std::vector<QASample>& questions,
                               const BinnedEstimator& confidence_model,
                               const SamplingConfig& fresh) {
  std::vector<ScoredPrediction> scored;
  for (const auto& q : questions) {
    const double c_hat = confidence_model.predict(q.question);
    const ResponseSet rs = sample_responses(generator, q, fresh);
    for (bool label : rs.labels) scored.push_back({c_hat, label});
  }
  return auroc(scored);
}

std::string report_to_line(const EvaluationReport& report) {
  auto real_or_null = [](const std::optional<double>& v) {
    return v ? format_real(*v) : std::string("null");
  };
  const auto& c = report.counts;
  return "{\"label\":" + nlohmann::json(report.label).dump() +
         ",\"questions\":" + std::to_string(report.questions) +
         ",\"KC\":" + std::to_string(c.kc) + ",\"KI\":" + std::to_string(c.ki) +
         ",\"KR\":" + std::to_string(c.kr) + ",\"UC\":" + std::to_string(c.uc) +
         ",\"UI\":" + std::to_string(c.ui) + ",\"UR\":" + std::to_string(c.ur) +
         ",\"precision\":" + real_or_null(report.precision) +
         ",\"truthfulness\":" + real_or_null(report.truthfulness) +
         ",\"auroc\":" + real_or_null(report.auroc) + "}";
}

std::string report_table(std::span<const EvaluationReport> reports) {
  auto pct = [](const std::optional<double>& v) {
    char buffer[32];
    if (!v) return std::string("    n/a");
    std::snprintf(buffer, sizeof(buffer), "%7.2f", 100.0 * *v);
    return std::string(buffer);
  };
  std::string out =
      "policy        n    KC    KI    KR    UC    UI    UR    Prec.  Truth.  AUROC\n";
  for (const auto& r : reports) {
    char row[160];
    const auto& c = r.counts;
    std::snprintf(row, sizeof(row), "%-10s %4zu %5llu %5llu %5llu %5llu %5llu %5llu",
                  r.label.c_str(), r.questions,
                  static_cast<unsigned long long>(c.kc), static_cast<unsigned long long>(c.ki),
                  static_cast<unsigned long long>(c.kr), static_cast<unsigned long long>(c.uc),
                  static_cast<unsigned long long>(c.ui), static_cast<unsigned long long>(c.ur));
    out += row;
    out += "  " + pct(r.precision) + " " + pct(r.truthfulness) + " " + pct(r.auroc) + "\n";
  }
  return out;
}

}  // namespace ualign
