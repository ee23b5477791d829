#include "ualign/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "ualign/error.hpp"
#include "ualign/eval.hpp"
#include "ualign/text.hpp"

namespace ualign {

void SamplingConfig::validate() const {
  if (k < 1) throw ConfigError("k", "sample count must be at least 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature", "must be positive");
  }
}

Rng sample_stream(std::uint64_t seed, std::string_view question_id,
                  int exemplar) {
  return Rng(mix_seed(mix_seed(seed, fnv1a64(question_id)),
                      static_cast<std::uint64_t>(exemplar)));
}

std::vector<bool> label_answers(const std::vector<std::string>& answers,
                                const std::string& reference) {
  std::vector<bool> labels;
  labels.reserve(answers.size());
  for (const auto& a : answers) labels.push_back(prem_match(a, reference));
  return labels;
}

ResponseSet sample_responses(const Generator& generator,
                             const QASample& question,
                             const SamplingConfig& config) {
  config.validate();
  ResponseSet rs;
  rs.question_id = question.id;
  rs.answers.reserve(static_cast<std::size_t>(config.k));
  for (int k = 1; k <= config.k; ++k) {
    Rng rng = sample_stream(config.seed, question.id, k);
    std::string answer;
    try {
      answer = generator.sample(question, k, config.temperature, rng);
    } catch (const std::exception& e) {
      throw SamplingError(question.id, k, e.what());
    }
    if (trim(answer).empty()) {
      throw SamplingError(question.id, k, "generator returned an empty answer");
    }
    rs.answers.push_back(std::move(answer));
  }
  rs.labels = label_answers(rs.answers, question.reference_answer);
  return rs;
}

KnownStatus classify_known(const std::vector<bool>& labels) {
  return std::any_of(labels.begin(), labels.end(), [](bool z) { return z; })
             ? KnownStatus::Known
             : KnownStatus::Unknown;
}

}  // namespace ualign
