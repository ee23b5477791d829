#ifndef UALIGN_ALIGN_HPP_
#define UALIGN_ALIGN_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ualign/dataset.hpp"
#include "ualign/features.hpp"
#include "ualign/models.hpp"

namespace ualign {

inline constexpr double kReferenceFloor = 1e-8;

struct PolicyInitConfig {
  std::size_t epochs = 150;
  double learning_rate = 0.5;
  // Additive smoothing of the sampled-answer counts used as the fit target,
  // so candidates never sampled keep some mass under the reference policy.
  double smoothing = 0.5;
  std::uint64_t seed = 0;
};

struct PpoConfig {
  double clip = 0.2;
  double learning_rate = 0.05;  // Adam step size
  std::size_t inner_epochs = 4;
  std::size_t batch_size = 50;
  double beta = 0.1;
  std::size_t epochs = 40;
  double baseline_momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PolicyQuestion {
  std::string id;
  std::string question;
  // Sampled answers (first occurrence order), then the reference answer,
  // then the refusal string, deduplicated by normalized form.
  std::vector<std::string> candidates;
  std::vector<bool> refusal;
  std::vector<SparseVector> base_features;  // phi without measure slots
  std::vector<double> target;  // smoothed sampled-answer frequencies
};

// Candidate-set policy: softmax over w . phi(x, c, e, y). The reference
// policy scores the same candidates with frozen weights and without the
// measure slots.
class PolicyState {
 public:
  PolicyState(const std::vector<AlignRecord>& records, FeatureMap features,
              RefusalPolicy refusal, double smoothing = 0.5);

  const FeatureMap& features() const { return features_; }
  const RefusalPolicy& refusal() const { return refusal_; }
  const std::vector<PolicyQuestion>& questions() const { return questions_; }
  std::size_t size() const { return questions_.size(); }
  std::size_t index_of(std::string_view question_id) const;

  std::vector<double> weights;
  std::vector<double> reference_weights;

  SparseVector candidate_features(std::size_t q, std::size_t j,
                                  const Measures& m) const;

  // pi_theta(. | x, c, e) under `w` (defaults to the current weights).
  std::vector<double> probabilities(std::size_t q, const Measures& m) const;
  std::vector<double> probabilities(std::size_t q, const Measures& m,
                                    std::span<const double> w) const;
  // pi_o(. | x)
  std::vector<double> reference_probabilities(std::size_t q) const;

  // Greedy decoding; lowest index wins ties.
  std::size_t argmax(std::size_t q, const Measures& m) const;
  std::size_t reference_argmax(std::size_t q) const;

 private:
  FeatureMap features_;
  RefusalPolicy refusal_;
  std::vector<PolicyQuestion> questions_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Fits the shared weights by maximum likelihood to each question's
// smoothed sampled-answer frequencies, then freezes a copy as reference.
PolicyState init_policy(const std::vector<AlignRecord>& records,
                        const PolicyInitConfig& config,
                        const FeatureMap& features = FeatureMap(),
                        const RefusalPolicy& refusal = {});

// Exact categorical KL(p || q) in nats; q is floored at kReferenceFloor and
// renormalized first.
double kl_divergence(std::span<const double> p, std::span<const double> q);

double kl_term(const PolicyState& policy, std::size_t q, const Measures& m);

// Mean KL over all questions, each under its own measures.
double mean_kl(const PolicyState& policy, std::span<const Measures> measures);

struct Rollout {
  std::size_t question = 0;
  std::size_t action = 0;
  double old_probability = 1.0;
  double advantage = 0.0;
  Measures measures;
};

// Mean over rollouts of min(rho A, clip(rho, 1-eps, 1+eps) A) - beta KL,
// with rho A in place of the min when clipped is false and KL the exact
// divergence of the rollout's question under w.
double surrogate_objective(const PolicyState& policy, std::span<const double> w,
                           std::span<const Rollout> rollouts, double clip,
                           bool clipped = true, double beta = 0.0);
// Analytic gradient of surrogate_objective with respect to w.
std::vector<double> surrogate_gradient(const PolicyState& policy,
                                       std::span<const double> w,
                                       std::span<const Rollout> rollouts,
                                       double clip, bool clipped = true,
                                       double beta = 0.0);

struct StepStats {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double mean_r = 0.0;
  double mean_r1 = 0.0;
  double mean_r2 = 0.0;
  double mean_kl = 0.0;  // over all questions, after the update
};

// Stage-2 optimizer state. Reward model and estimators are held by const
// reference and never modified.
class PpoTrainer {
 public:
  PpoTrainer(PolicyState& policy, const RewardModel& reward,
             const BinnedEstimator& confidence_model,
             const BinnedEstimator& entropy_model, PpoConfig config);

  // One rollout per question in the batch, reward r = r1 - beta * KL.
  // Advantages are r1 against a running-mean baseline; inner_epochs ascent
  // steps on the clipped surrogate with the exact KL penalty.
  StepStats ppo_step(std::span<const std::size_t> batch, std::size_t epoch = 0);

  const std::vector<Measures>& measures() const { return measures_; }
  const std::vector<Rollout>& last_rollouts() const { return last_rollouts_; }
  double baseline() const { return baseline_; }

 private:
  // Adam (0.9, 0.999, 1e-8) ascent step on the policy weights.
  void adam_ascent(const std::vector<double>& grad);

  PolicyState& policy_;
  const RewardModel& reward_;
  PpoConfig config_;
  std::vector<Measures> measures_;
  std::vector<Rollout> last_rollouts_;
  Rng rng_;
  double baseline_ = 0.0;
  bool has_baseline_ = false;
  std::size_t steps_ = 0;
  std::vector<double> first_moment_;
  std::vector<double> second_moment_;
  std::size_t updates_ = 0;
};

struct AlignResult {
  PolicyState policy;
  std::vector<StepStats> curve;
};

// Runs ppo_step over shuffled batches for config.epochs passes. Batches are
// drawn from train_questions (policy indices), or from every question when
// that list is empty.
AlignResult align(PolicyState initial, const RewardModel& reward,
                  const BinnedEstimator& confidence_model,
                  const BinnedEstimator& entropy_model, const PpoConfig& config,
                  std::vector<std::size_t> train_questions = {});

}  // namespace ualign

#endif  // UALIGN_ALIGN_HPP_
