#ifndef UALIGN_MODELS_HPP_
#define UALIGN_MODELS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ualign/dataset.hpp"
#include "ualign/features.hpp"

namespace ualign {

// Plain gradient descent with a fixed step. batch_size 0 means full batch.
struct TrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 0.1;
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
};

struct TrainReport {
  // Full-data loss before the first epoch and after every epoch.
  std::vector<double> epoch_losses;
  double final_loss = 0.0;
  double accuracy = 0.0;  // reward model only: held-in accuracy at 0.5
};

enum class UncertaintyTarget { Confidence, Entropy };

std::string_view target_name(UncertaintyTarget target);
UncertaintyTarget parse_target(std::string_view name);

struct EstimatorExample {
  SparseVector x;
  std::size_t bin;
};

// Softmax classifier over discretized measure values. Confidence uses 11
// bins centered at 0.0, 0.1, ..., 1.0; entropy uses 16 uniform bins on
// [0, ln K].
class BinnedEstimator {
 public:
  BinnedEstimator(UncertaintyTarget target, FeatureMap features,
                  int samples_per_question);

  UncertaintyTarget target() const { return target_; }
  const FeatureMap& features() const { return features_; }
  int samples_per_question() const { return samples_; }
  std::size_t bins() const { return centers_.size(); }
  const std::vector<double>& centers() const { return centers_; }

  // Row-major [bins x dims].
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  // Nearest bin center; ties go to the lower bin.
  std::size_t bin_of(double value) const;

  std::vector<double> probabilities(const SparseVector& x) const;
  std::vector<double> probabilities(std::string_view question) const;
  // Center of the argmax bin, lowest index on ties.
  double predict(std::string_view question) const;

  std::uint64_t seed = 0;

  bool operator==(const BinnedEstimator&) const = default;

 private:
  UncertaintyTarget target_;
  FeatureMap features_;
  int samples_;
  std::vector<double> centers_;
  std::vector<double> weights_;
};

// Mean cross-entropy of the true bins; fills grad (same layout as weights)
// when non-null.
double estimator_loss(std::span<const double> weights, std::size_t bins,
                      std::size_t dims, std::span<const EstimatorExample> examples,
                      std::vector<double>* grad);

std::vector<EstimatorExample> estimator_examples(
    const BinnedEstimator& estimator, const std::vector<AlignRecord>& records);

BinnedEstimator train_estimator(const std::vector<AlignRecord>& records,
                                UncertaintyTarget target,
                                const TrainConfig& config,
                                const FeatureMap& features = FeatureMap(),
                                TrainReport* report = nullptr);

Measures predict_uncertainty(const BinnedEstimator& confidence_model,
                             const BinnedEstimator& entropy_model,
                             std::string_view question);

struct RewardExample {
  SparseVector x;
  int z;
};

struct RewardOptions {
  bool use_confidence = true;
  bool use_entropy = true;
  std::string refusal_string{kDefaultRefusal};

  bool operator==(const RewardOptions&) const = default;
};

// Logistic correctness model over phi(x, c, e, y).
class RewardModel {
 public:
  explicit RewardModel(FeatureMap features = FeatureMap(),
                       RewardOptions options = {});

  const FeatureMap& features() const { return features_; }
  const RewardOptions& options() const { return options_; }

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  double bias = 0.0;
  std::uint64_t seed = 0;

  SparseVector featurize(std::string_view question, const Measures& m,
                         std::string_view answer) const;
  double logit(const SparseVector& x) const;
  // sigmoid(w . phi + b), in (0, 1).
  double score(std::string_view question, const Measures& m,
               std::string_view answer) const;

  bool operator==(const RewardModel&) const = default;

 private:
  FeatureMap features_;
  RewardOptions options_;
  std::vector<double> weights_;
};

double sigmoid(double t);

// Mean binary cross-entropy; params = [weights..., bias].
double reward_loss(std::span<const double> params,
                   std::span<const RewardExample> examples,
                   std::vector<double>* grad);

// One example per sampled answer with its label, plus the refusal string
// as a positive example for unknown questions and a negative one for
// known questions.
std::vector<RewardExample> reward_examples(const RewardModel& model,
                                           const std::vector<AlignRecord>& records);

double reward_accuracy(const RewardModel& model,
                       std::span<const RewardExample> examples);

RewardModel train_reward(const std::vector<AlignRecord>& records,
                         const TrainConfig& config,
                         const RewardOptions& options = {},
                         const FeatureMap& features = FeatureMap(),
                         TrainReport* report = nullptr);

}  // namespace ualign

#endif  // UALIGN_MODELS_HPP_
