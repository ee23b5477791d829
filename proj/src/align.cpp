#include "ualign/align.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ualign/error.hpp"
#include "ualign/eval.hpp"
#include "ualign/text.hpp"

namespace ualign {

namespace {

std::vector<double> softmax(std::vector<double> logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

std::size_t first_max(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

}  // namespace

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("clip", "must lie in (0, 1)");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta", "must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
  if (batch_size == 0) throw ConfigError("batch_size", "must be at least 1");
  if (!(baseline_momentum >= 0.0 && baseline_momentum < 1.0)) {
    throw ConfigError("baseline_momentum", "must lie in [0, 1)");
  }
}

PolicyState::PolicyState(const std::vector<AlignRecord>& records,
                         FeatureMap features, RefusalPolicy refusal,
                         double smoothing)
    : weights(features.dims(), 0.0),
      reference_weights(features.dims(), 0.0),
      features_(features),
      refusal_(std::move(refusal)) {
  if (!(smoothing >= 0.0)) throw ConfigError("smoothing", "must be >= 0");
  for (const auto& r : records) {
    PolicyQuestion pq;
    pq.id = r.question_id;
    pq.question = r.question;
    std::vector<std::string> keys;
    std::vector<double> counts;
    auto add = [&](const std::string& text, double count) {
      const std::string key = normalize_answer(text);
      auto it = std::find(keys.begin(), keys.end(), key);
      if (it == keys.end()) {
        keys.push_back(key);
        pq.candidates.push_back(text);
        counts.push_back(count);
      } else {
        counts[static_cast<std::size_t>(it - keys.begin())] += count;
      }
    };
    for (const auto& a : r.answers) add(a, 1.0);
    add(r.reference_answer, 0.0);
    add(refusal_.refusal_string, 0.0);
    if (pq.candidates.empty()) {
      throw InitializationError("question " + r.question_id + " has no candidates");
    }

    const double total = static_cast<double>(r.answers.size()) +
                         smoothing * static_cast<double>(counts.size());
    for (std::size_t j = 0; j < pq.candidates.size(); ++j) {
      const bool refusal_candidate = is_refusal(pq.candidates[j], refusal_.refusal_string);
      pq.refusal.push_back(refusal_candidate);
      pq.base_features.push_back(
          features_.candidate(pq.question, pq.candidates[j], refusal_candidate));
      pq.target.push_back((counts[j] + smoothing) / total);
    }
    if (!index_.emplace(pq.id, questions_.size()).second) {
      throw InitializationError("duplicate question id " + pq.id);
    }
    questions_.push_back(std::move(pq));
  }
}

std::size_t PolicyState::index_of(std::string_view question_id) const {
  auto it = index_.find(std::string(question_id));
  if (it == index_.end()) {
    throw DomainError("policy has no question '" + std::string(question_id) + "'");
  }
  return it->second;
}

SparseVector PolicyState::candidate_features(std::size_t q, std::size_t j,
                                             const Measures& m) const {
  const PolicyQuestion& pq = questions_[q];
  SparseVector x = pq.base_features[j];
  features_.add_measures(x, m, pq.refusal[j], true, true);
  return x;
}

std::vector<double> PolicyState::probabilities(std::size_t q,
                                               const Measures& m) const {
  return probabilities(q, m, weights);
}

std::vector<double> PolicyState::probabilities(std::size_t q, const Measures& m,
                                               std::span<const double> w) const {
  const PolicyQuestion& pq = questions_[q];
  std::vector<double> logits(pq.candidates.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    logits[j] = dot(w, candidate_features(q, j, m));
  }
  return softmax(std::move(logits));
}

std::vector<double> PolicyState::reference_probabilities(std::size_t q) const {
  const PolicyQuestion& pq = questions_[q];
  std::vector<double> logits(pq.candidates.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    logits[j] = dot(reference_weights, pq.base_features[j]);
  }
  return softmax(std::move(logits));
}

std::size_t PolicyState::argmax(std::size_t q, const Measures& m) const {
  return first_max(probabilities(q, m));
}

std::size_t PolicyState::reference_argmax(std::size_t q) const {
  return first_max(reference_probabilities(q));
}

PolicyState init_policy(const std::vector<AlignRecord>& records,
                        const PolicyInitConfig& config, const FeatureMap& features,
                        const RefusalPolicy& refusal) {
  if (records.empty()) throw InitializationError("no records to initialize from");
  PolicyState ps(records, features, refusal, config.smoothing);
  Rng rng(derive_seed(config.seed, "policy-init"));
  std::vector<std::size_t> order(ps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t q : order) {
      const PolicyQuestion& pq = ps.questions()[q];
      const auto p = ps.reference_probabilities(q);
      for (std::size_t j = 0; j < p.size(); ++j) {
        // d/dw of cross-entropy(target, softmax) = sum_j (p_j - t_j) phi_j
        axpy(-config.learning_rate * (p[j] - pq.target[j]), pq.base_features[j],
             ps.reference_weights);
      }
    }
  }
  for (double w : ps.reference_weights) {
    if (!std::isfinite(w)) {
      throw DivergenceError("policy initialization diverged; try a smaller learning rate");
    }
  }
  ps.weights = ps.reference_weights;
  return ps;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("KL over mismatched supports");
  std::vector<double> floored(q.begin(), q.end());
  double total = 0.0;
  for (double& v : floored) {
    v = std::max(v, kReferenceFloor);
    total += v;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / (floored[i] / total));
  }
  return std::max(kl, 0.0);
}

double kl_term(const PolicyState& policy, std::size_t q, const Measures& m) {
  return kl_divergence(policy.probabilities(q, m), policy.reference_probabilities(q));
}

double mean_kl(const PolicyState& policy, std::span<const Measures> measures) {
  if (policy.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t q = 0; q < policy.size(); ++q) total += kl_term(policy, q, measures[q]);
  return total / static_cast<double>(policy.size());
}

double surrogate_objective(const PolicyState& policy, std::span<const double> w,
                           std::span<const Rollout> rollouts, double clip,
                           bool clipped, double beta) {
  double total = 0.0;
  for (const auto& ro : rollouts) {
    const double rho = policy.probabilities(ro.question, ro.measures, w)[ro.action] /
                       ro.old_probability;
    const double unclipped = rho * ro.advantage;
    total += clipped ? std::min(unclipped,
                                std::clamp(rho, 1.0 - clip, 1.0 + clip) * ro.advantage)
                     : unclipped;
    if (beta != 0.0) {
      total -= beta * kl_divergence(policy.probabilities(ro.question, ro.measures, w),
                                    policy.reference_probabilities(ro.question));
    }
  }
  return rollouts.empty() ? 0.0 : total / static_cast<double>(rollouts.size());
}

std::vector<double> surrogate_gradient(const PolicyState& policy,
                                       std::span<const double> w,
                                       std::span<const Rollout> rollouts,
                                       double clip, bool clipped, double beta) {
  std::vector<double> grad(w.size(), 0.0);
  if (rollouts.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(rollouts.size());
  for (const auto& ro : rollouts) {
    const auto p = policy.probabilities(ro.question, ro.measures, w);
    if (beta != 0.0) {
      // d KL / d z_j = p_j (log(p_j / q_j) - KL), q floored as in kl_divergence
      auto q = policy.reference_probabilities(ro.question);
      double total = 0.0;
      for (double& v : q) total += (v = std::max(v, kReferenceFloor));
      const double kl = kl_divergence(p, q);
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] <= 0.0) continue;
        const double g = -beta * scale * p[j] * (std::log(p[j] / (q[j] / total)) - kl);
        if (g != 0.0) axpy(g, policy.candidate_features(ro.question, j, ro.measures), grad);
      }
    }
    const double rho = p[ro.action] / ro.old_probability;
    // The min picks the constant clipped branch once rho leaves the trust
    // region in the direction the advantage rewards.
    if (clipped) {
      if (ro.advantage >= 0.0 && rho > 1.0 + clip) continue;
      if (ro.advantage < 0.0 && rho < 1.0 - clip) continue;
    }
    // grad rho = rho * (phi_a - E_p[phi])
    const double coef = scale * ro.advantage * rho;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = coef * ((j == ro.action ? 1.0 : 0.0) - p[j]);
      if (g != 0.0) axpy(g, policy.candidate_features(ro.question, j, ro.measures), grad);
    }
  }
  return grad;
}

PpoTrainer::PpoTrainer(PolicyState& policy, const RewardModel& reward,
                       const BinnedEstimator& confidence_model,
                       const BinnedEstimator& entropy_model, PpoConfig config)
    : policy_(policy),
      reward_(reward),
      config_(config),
      rng_(derive_seed(config.seed, "rollouts")) {
  config_.validate();
  measures_.reserve(policy_.size());
  for (const auto& pq : policy_.questions()) {
    measures_.push_back(predict_uncertainty(confidence_model, entropy_model, pq.question));
  }
}

void PpoTrainer::adam_ascent(const std::vector<double>& grad) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (first_moment_.empty()) {
    first_moment_.assign(grad.size(), 0.0);
    second_moment_.assign(grad.size(), 0.0);
  }
  ++updates_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(updates_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(updates_));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    double& m = first_moment_[i];
    double& v = second_moment_[i];
    m = kBeta1 * m + (1.0 - kBeta1) * grad[i];
    v = kBeta2 * v + (1.0 - kBeta2) * grad[i] * grad[i];
    if (v == 0.0) continue;
    policy_.weights[i] += config_.learning_rate * (m / c1) / (std::sqrt(v / c2) + kEps);
  }
}

StepStats PpoTrainer::ppo_step(std::span<const std::size_t> batch,
                               std::size_t epoch) {
  StepStats stats;
  stats.step = steps_++;
  stats.epoch = epoch;
  if (batch.empty()) {
    stats.mean_kl = mean_kl(policy_, measures_);
    return stats;
  }

  std::vector<Rollout> rollouts;
  std::vector<double> rewards;
  rollouts.reserve(batch.size());
  for (std::size_t q : batch) {
    const PolicyQuestion& pq = policy_.questions()[q];
    const Measures& m = measures_[q];
    const auto p = policy_.probabilities(q, m);
    const std::size_t action = rng_.categorical(p);
    const double r1 = reward_.score(pq.question, m, pq.candidates[action]);
    const double r2 = kl_divergence(p, policy_.reference_probabilities(q));
    const double r = r1 - config_.beta * r2;
    stats.mean_r1 += r1;
    stats.mean_r2 += r2;
    stats.mean_r += r;
    rewards.push_back(r1);
    rollouts.push_back({q, action, p[action], 0.0, m});
  }
  const double n = static_cast<double>(batch.size());
  stats.mean_r /= n;
  stats.mean_r1 /= n;
  stats.mean_r2 /= n;

  // The KL part of r does not depend on the sampled action, so it has no
  // expected score-function gradient; advantages use r1 and the penalty
  // enters the surrogate through its exact gradient instead.
  if (!has_baseline_) {
    baseline_ = stats.mean_r1;
    has_baseline_ = true;
  }
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    rollouts[i].advantage = rewards[i] - baseline_;
  }
  baseline_ = config_.baseline_momentum * baseline_ +
              (1.0 - config_.baseline_momentum) * stats.mean_r1;

  for (std::size_t inner = 0; inner < config_.inner_epochs; ++inner) {
    const auto grad = surrogate_gradient(policy_, policy_.weights, rollouts, config_.clip,
                                         true, config_.beta);
    for (double g : grad) {
      if (!std::isfinite(g)) {
        // Name the first rollout whose own gradient is non-finite.
        for (const auto& ro : rollouts) {
          const auto single = surrogate_gradient(policy_, policy_.weights,
                                                 std::span<const Rollout>(&ro, 1),
                                                 config_.clip, true, config_.beta);
          for (double s : single) {
            if (!std::isfinite(s)) {
              throw DivergenceError("non-finite policy gradient for question " +
                                    policy_.questions()[ro.question].id);
            }
          }
        }
        throw DivergenceError("non-finite policy gradient");
      }
    }
    adam_ascent(grad);
  }
  last_rollouts_ = std::move(rollouts);
  stats.mean_kl = mean_kl(policy_, measures_);
  return stats;
}

AlignResult align(PolicyState initial, const RewardModel& reward,
                  const BinnedEstimator& confidence_model,
                  const BinnedEstimator& entropy_model, const PpoConfig& config,
                  std::vector<std::size_t> train_questions) {
  AlignResult result{std::move(initial), {}};
  PpoTrainer trainer(result.policy, reward, confidence_model, entropy_model, config);
  Rng shuffle_rng(derive_seed(config.seed, "batches"));
  std::vector<std::size_t> order = std::move(train_questions);
  if (order.empty()) {
    order.resize(result.policy.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  for (std::size_t q : order) {
    if (q >= result.policy.size()) throw DomainError("training question index out of range");
  }
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      result.curve.push_back(trainer.ppo_step(
          std::span<const std::size_t>(order).subspan(start, len), epoch));
    }
  }
  return result;
}

}  // namespace ualign
