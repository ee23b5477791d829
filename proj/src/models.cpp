#include "ualign/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ualign/error.hpp"
#include "ualign/eval.hpp"

namespace ualign {

namespace {

constexpr std::size_t kConfidenceBins = 11;
constexpr std::size_t kEntropyBins = 16;

// Loss over a subset (indices) or over everything (indices empty).
template <typename Example, typename PerExample>
double mean_loss(std::span<const Example> examples,
                 std::span<const std::size_t> indices, PerExample&& per_example) {
  const std::size_t n = indices.empty() ? examples.size() : indices.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Example& ex = examples[indices.empty() ? i : indices[i]];
    total += per_example(ex, 1.0 / static_cast<double>(n));
  }
  return total / static_cast<double>(n);
}

double estimator_loss_impl(std::span<const double> w, std::size_t bins,
                           std::size_t dims,
                           std::span<const EstimatorExample> examples,
                           std::span<const std::size_t> indices,
                           std::vector<double>* grad) {
  if (grad) grad->assign(w.size(), 0.0);
  std::vector<double> logits(bins);
  return mean_loss(examples, indices, [&](const EstimatorExample& ex, double scale) {
    double max_logit = -INFINITY;
    for (std::size_t b = 0; b < bins; ++b) {
      logits[b] = dot(w.subspan(b * dims, dims), ex.x);
      max_logit = std::max(max_logit, logits[b]);
    }
    double z = 0.0;
    for (std::size_t b = 0; b < bins; ++b) z += std::exp(logits[b] - max_logit);
    const double log_z = max_logit + std::log(z);
    if (grad) {
      for (std::size_t b = 0; b < bins; ++b) {
        const double p = std::exp(logits[b] - log_z);
        const double g = (p - (b == ex.bin ? 1.0 : 0.0)) * scale;
        if (g != 0.0) axpy(g, ex.x, std::span<double>(*grad).subspan(b * dims, dims));
      }
    }
    return log_z - logits[ex.bin];
  });
}

double reward_loss_impl(std::span<const double> params,
                        std::span<const RewardExample> examples,
                        std::span<const std::size_t> indices,
                        std::vector<double>* grad) {
  const std::size_t dims = params.size() - 1;
  const auto w = params.first(dims);
  const double b = params[dims];
  if (grad) grad->assign(params.size(), 0.0);
  return mean_loss(examples, indices, [&](const RewardExample& ex, double scale) {
    const double t = dot(w, ex.x) + b;
    // -z log s(t) - (1-z) log(1 - s(t)) = softplus(t) - z t
    const double loss = std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))) -
                        static_cast<double>(ex.z) * t;
    if (grad) {
      const double g = (sigmoid(t) - static_cast<double>(ex.z)) * scale;
      axpy(g, ex.x, std::span<double>(*grad).first(dims));
      (*grad)[dims] += g;
    }
    return loss;
  });
}

// Fixed-step descent; loss(params, indices, grad) evaluates a batch (all
// examples when indices is empty).
template <typename LossFn>
void descend(std::vector<double>& params, std::size_t n_examples,
             const TrainConfig& config, LossFn&& loss, TrainReport* report) {
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw ConfigError("learning_rate", "must be positive");
  }
  const bool full_batch = config.batch_size == 0 || config.batch_size >= n_examples;
  Rng rng(derive_seed(config.seed, "minibatch"));
  std::vector<std::size_t> order(n_examples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad;
  std::vector<double> losses;
  losses.reserve(config.epochs + 1);

  auto check = [](double value, std::size_t epoch) {
    if (!std::isfinite(value)) {
      throw DivergenceError("training loss became non-finite at epoch " +
                            std::to_string(epoch) +
                            "; try a smaller learning rate");
    }
  };
  auto step = [&] {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] -= config.learning_rate * grad[i];
    }
  };

  if (full_batch) {
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      const double value = loss(params, std::span<const std::size_t>{}, &grad);
      check(value, epoch);
      losses.push_back(value);
      step();
    }
  } else {
    losses.push_back(loss(params, std::span<const std::size_t>{}, nullptr));
    check(losses.back(), 0);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t start = 0; start < n_examples; start += config.batch_size) {
        const std::size_t len = std::min(config.batch_size, n_examples - start);
        loss(params, std::span<const std::size_t>(order).subspan(start, len), &grad);
        step();
      }
      if (epoch + 1 < config.epochs) {
        losses.push_back(loss(params, std::span<const std::size_t>{}, nullptr));
        check(losses.back(), epoch + 1);
      }
    }
  }
  const double final_loss = loss(params, std::span<const std::size_t>{}, nullptr);
  check(final_loss, config.epochs);
  losses.push_back(final_loss);
  if (report) {
    report->epoch_losses = std::move(losses);
    report->final_loss = final_loss;
  }
}

int common_sample_count(const std::vector<AlignRecord>& records) {
  const std::size_t k = records.front().answers.size();
  for (const auto& r : records) {
    if (r.answers.size() != k) {
      throw ValidationError("answers", "records disagree on the sample count K");
    }
  }
  return static_cast<int>(k);
}

}  // namespace

std::string_view target_name(UncertaintyTarget target) {
  return target == UncertaintyTarget::Confidence ? "confidence" : "entropy";
}

UncertaintyTarget parse_target(std::string_view name) {
  if (name == "confidence") return UncertaintyTarget::Confidence;
  if (name == "entropy") return UncertaintyTarget::Entropy;
  throw ValidationError("target", "unknown estimator target '" + std::string(name) + "'");
}

BinnedEstimator::BinnedEstimator(UncertaintyTarget target, FeatureMap features,
                                 int samples_per_question)
    : target_(target), features_(features), samples_(samples_per_question) {
  if (samples_ < 1) throw ConfigError("samples", "K must be at least 1");
  if (target_ == UncertaintyTarget::Confidence) {
    for (std::size_t i = 0; i < kConfidenceBins; ++i) {
      centers_.push_back(static_cast<double>(i) / 10.0);
    }
  } else {
    const double width = std::log(static_cast<double>(samples_)) / kEntropyBins;
    for (std::size_t i = 0; i < kEntropyBins; ++i) {
      centers_.push_back((static_cast<double>(i) + 0.5) * width);
    }
  }
  weights_.assign(centers_.size() * features_.dims(), 0.0);
}

std::size_t BinnedEstimator::bin_of(double value) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < centers_.size(); ++i) {
    if (std::abs(value - centers_[i]) < std::abs(value - centers_[best])) best = i;
  }
  return best;
}

std::vector<double> BinnedEstimator::probabilities(const SparseVector& x) const {
  const std::size_t dims = features_.dims();
  std::vector<double> p(bins());
  double max_logit = -INFINITY;
  for (std::size_t b = 0; b < p.size(); ++b) {
    p[b] = dot(std::span<const double>(weights_).subspan(b * dims, dims), x);
    max_logit = std::max(max_logit, p[b]);
  }
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - max_logit);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> BinnedEstimator::probabilities(std::string_view question) const {
  return probabilities(features_.question(question));
}

double BinnedEstimator::predict(std::string_view question) const {
  const auto p = probabilities(question);
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return centers_[best];
}

double estimator_loss(std::span<const double> weights, std::size_t bins,
                      std::size_t dims, std::span<const EstimatorExample> examples,
                      std::vector<double>* grad) {
  return estimator_loss_impl(weights, bins, dims, examples, {}, grad);
}

std::vector<EstimatorExample> estimator_examples(
    const BinnedEstimator& estimator, const std::vector<AlignRecord>& records) {
  std::vector<EstimatorExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const double value = estimator.target() == UncertaintyTarget::Confidence
                             ? r.confidence
                             : r.entropy;
    out.push_back({estimator.features().question(r.question), estimator.bin_of(value)});
  }
  return out;
}

BinnedEstimator train_estimator(const std::vector<AlignRecord>& records,
                                UncertaintyTarget target,
                                const TrainConfig& config,
                                const FeatureMap& features, TrainReport* report) {
  if (records.empty()) throw DegenerateDataError("no records to train on");
  BinnedEstimator est(target, features, common_sample_count(records));
  est.seed = config.seed;
  const auto examples = estimator_examples(est, records);
  const std::size_t bins = est.bins();
  const std::size_t dims = features.dims();
  descend(est.weights(), examples.size(), config,
          [&](std::span<const double> w, std::span<const std::size_t> idx,
              std::vector<double>* grad) {
            return estimator_loss_impl(w, bins, dims, examples, idx, grad);
          },
          report);
  return est;
}

Measures predict_uncertainty(const BinnedEstimator& confidence_model,
                             const BinnedEstimator& entropy_model,
                             std::string_view question) {
  return {confidence_model.predict(question), entropy_model.predict(question)};
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

RewardModel::RewardModel(FeatureMap features, RewardOptions options)
    : features_(features), options_(std::move(options)),
      weights_(features_.dims(), 0.0) {}

SparseVector RewardModel::featurize(std::string_view question, const Measures& m,
                                    std::string_view answer) const {
  const bool refusal = is_refusal(answer, options_.refusal_string);
  SparseVector x = features_.candidate(question, answer, refusal);
  features_.add_measures(x, m, refusal, options_.use_confidence, options_.use_entropy);
  return x;
}

double RewardModel::logit(const SparseVector& x) const {
  return dot(weights_, x) + bias;
}

double RewardModel::score(std::string_view question, const Measures& m,
                          std::string_view answer) const {
  return sigmoid(logit(featurize(question, m, answer)));
}

double reward_loss(std::span<const double> params,
                   std::span<const RewardExample> examples,
                   std::vector<double>* grad) {
  return reward_loss_impl(params, examples, {}, grad);
}

std::vector<RewardExample> reward_examples(const RewardModel& model,
                                           const std::vector<AlignRecord>& records) {
  std::vector<RewardExample> out;
  for (const auto& r : records) {
    const Measures m{r.confidence, r.entropy};
    for (std::size_t k = 0; k < r.answers.size(); ++k) {
      out.push_back({model.featurize(r.question, m, r.answers[k]), r.labels[k] ? 1 : 0});
    }
    out.push_back({model.featurize(r.question, m, model.options().refusal_string),
                   r.refusal_flag ? 1 : 0});
  }
  return out;
}

double reward_accuracy(const RewardModel& model,
                       std::span<const RewardExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    const int predicted = sigmoid(model.logit(ex.x)) >= 0.5 ? 1 : 0;
    hits += predicted == ex.z ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

RewardModel train_reward(const std::vector<AlignRecord>& records,
                         const TrainConfig& config, const RewardOptions& options,
                         const FeatureMap& features, TrainReport* report) {
  if (records.empty()) throw DegenerateDataError("no records to train on");
  RewardModel model(features, options);
  model.seed = config.seed;
  const auto examples = reward_examples(model, records);
  const auto positives = std::count_if(examples.begin(), examples.end(),
                                       [](const RewardExample& e) { return e.z == 1; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(examples.size())) {
    throw DegenerateDataError("reward training data contains a single class");
  }

  std::vector<double> params(features.dims() + 1, 0.0);
  TrainReport local;
  descend(params, examples.size(), config,
          [&](std::span<const double> p, std::span<const std::size_t> idx,
              std::vector<double>* grad) {
            return reward_loss_impl(p, examples, idx, grad);
          },
          &local);
  std::copy(params.begin(), params.end() - 1, model.weights().begin());
  model.bias = params.back();
  local.accuracy = reward_accuracy(model, examples);
  if (report) *report = std::move(local);
  return model;
}

}  // namespace ualign
