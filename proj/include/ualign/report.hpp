#ifndef UALIGN_REPORT_HPP_
#define UALIGN_REPORT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ualign/align.hpp"
#include "ualign/eval.hpp"
#include "ualign/world.hpp"

namespace ualign {

enum class PolicyView { Current, Reference };

struct EvaluationReport {
  std::string label;
  std::size_t questions = 0;
  OutcomeCounts counts;
  // Empty when the metric is undefined for this evaluation set.
  std::optional<double> precision;
  std::optional<double> truthfulness;
  std::optional<double> auroc;  // predicted confidence vs answer correctness
};

struct GreedyAnswer {
  std::string question_id;
  std::string answer;
  Outcome outcome;
  double predicted_confidence;
};

// Greedy decoding for every evaluation record. Known status comes from the
// record's dataset samples, not from the policy.
std::vector<GreedyAnswer> greedy_answers(const PolicyState& policy,
                                         const std::vector<AlignRecord>& records,
                                         const BinnedEstimator& confidence_model,
                                         const BinnedEstimator& entropy_model,
                                         PolicyView view);

EvaluationReport summarize_answers(const std::vector<GreedyAnswer>& answers,
                                   std::string label);

EvaluationReport evaluate_policy(const PolicyState& policy,
                                 const std::vector<AlignRecord>& records,
                                 const BinnedEstimator& confidence_model,
                                 const BinnedEstimator& entropy_model,
                                 PolicyView view, std::string label);

// Weakly known questions whose correct cluster is at least as large as any
// other cluster while confidence stays below one half: the plurality answer
// is right but a sampled answer is usually wrong.
bool plurality_correct_weak(const AlignRecord& record, const QASample& question);

struct CohortResult {
  std::size_t questions = 0;
  std::size_t initial_correct = 0;
  std::size_t aligned_correct = 0;
};

// Correct-argmax counts for that cohort under the reference and current
// policies. `questions` supplies tiers by id; records without a tier are
// skipped.
CohortResult plurality_cohort(const PolicyState& policy,
                              const std::vector<AlignRecord>& records,
                              const std::vector<QASample>& questions,
                              const BinnedEstimator& confidence_model,
                              const BinnedEstimator& entropy_model);

// AUROC of c_hat(question) against the correctness of each of K fresh
// samples per question.
double sample_confidence_auroc(const Generator& generator,
                               const std::vector<QASample>& questions,
                               const BinnedEstimator& confidence_model,
                               const SamplingConfig& fresh);

// One JSON object per report; undefined metrics are null.
std::string report_to_line(const EvaluationReport& report);
std::string report_table(std::span<const EvaluationReport> reports);

}  // namespace ualign

#endif  // UALIGN_REPORT_HPP_
