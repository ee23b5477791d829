#ifndef UALIGN_SAMPLING_HPP_
#define UALIGN_SAMPLING_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ualign/world.hpp"

namespace ualign {

struct SamplingConfig {
  int k = 10;
  double temperature = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ResponseSet {
  std::string question_id;
  std::vector<std::string> answers;
  std::vector<bool> labels;

  std::size_t size() const { return answers.size(); }
  bool operator==(const ResponseSet&) const = default;
};

// Rng substream for one (question, exemplar) draw. Depends only on the
// sampling seed, the question id and k, so adding questions never moves
// existing samples.
Rng sample_stream(std::uint64_t seed, std::string_view question_id,
                  int exemplar);

// K generations, one per exemplar index k = 1..K, labeled by PREM against
// the reference answer. Any generator failure aborts the whole question
// with a SamplingError.
ResponseSet sample_responses(const Generator& generator,
                             const QASample& question,
                             const SamplingConfig& config);

std::vector<bool> label_answers(const std::vector<std::string>& answers,
                                const std::string& reference);

enum class KnownStatus { Known, Unknown };

// Known iff at least one sampled answer is correct.
KnownStatus classify_known(const std::vector<bool>& labels);
inline KnownStatus classify_known(const ResponseSet& rs) {
  return classify_known(rs.labels);
}

}  // namespace ualign

#endif  // UALIGN_SAMPLING_HPP_
