#ifndef UALIGN_CHECKPOINT_HPP_
#define UALIGN_CHECKPOINT_HPP_

#include <string>
#include <string_view>

#include "ualign/align.hpp"
#include "ualign/models.hpp"

namespace ualign {

// Text checkpoints: "key value" header lines (format tag, kind, dims, bins,
// seed, hash id, ...), a "rows N" line, then N lines of space-separated
// reals printed with 17 significant digits. Round trips are bit-exact.

std::string serialize_estimator(const BinnedEstimator& estimator);
BinnedEstimator parse_estimator(std::string_view text);

std::string serialize_reward(const RewardModel& model);
RewardModel parse_reward(std::string_view text);

// Stores the trainable and reference weight rows. Candidate sets are not
// stored; they are rebuilt from the dataset the policy was trained on.
std::string serialize_policy(const PolicyState& policy, std::uint64_t seed);
void load_policy_weights(std::string_view text, PolicyState& policy);

void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

}  // namespace ualign

#endif  // UALIGN_CHECKPOINT_HPP_
