#ifndef UALIGN_DATASET_HPP_
#define UALIGN_DATASET_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ualign/sampling.hpp"
#include "ualign/uncertainty.hpp"
#include "ualign/world.hpp"

namespace ualign {

inline constexpr std::string_view kDefaultRefusal = "Sorry, I don't know.";

struct RefusalPolicy {
  std::string refusal_string{kDefaultRefusal};
};

// One row of the alignment dataset. reference_answer keeps the original
// ground truth even when target_answer was rewritten to a refusal.
struct AlignRecord {
  std::string question_id;
  std::string question;
  std::vector<std::string> answers;
  std::vector<bool> labels;
  std::string reference_answer;
  std::string target_answer;
  double confidence = 0.0;
  double entropy = 0.0;
  bool refusal_flag = false;

  bool known() const { return !refusal_flag; }
  bool operator==(const AlignRecord&) const = default;
};

AlignRecord assemble(const QASample& question, const ResponseSet& responses,
                     const UncertaintySummary& summary,
                     const RefusalPolicy& policy = {});

// Sampling + uncertainty + assembly for every question, in input order.
std::vector<AlignRecord> build_dataset(const Generator& generator,
                                       const std::vector<QASample>& questions,
                                       const SamplingConfig& sampling,
                                       const EquivalenceOracle& oracle,
                                       const RefusalPolicy& policy = {});

// Record wire format: one JSON object per line, fixed field order, reals
// printed with 17 significant digits.
std::string record_to_line(const AlignRecord& record);
AlignRecord record_from_line(std::string_view line, std::size_t line_number,
                             const RefusalPolicy& policy = {});

void write_dataset(const std::vector<AlignRecord>& records,
                   const std::string& path);
std::string serialize_dataset(const std::vector<AlignRecord>& records);
// Throws LoadError (with line number) on malformed lines and
// ValidationError (naming the field) on invariant violations.
std::vector<AlignRecord> read_dataset(const std::string& path,
                                      const RefusalPolicy& policy = {});
std::vector<AlignRecord> parse_dataset(std::string_view text,
                                       const RefusalPolicy& policy = {});

// Recomputes labels (from reference_answer), confidence and entropy and
// throws ValidationError on the first mismatch.
void verify_records(const std::vector<AlignRecord>& records,
                    const EquivalenceOracle& oracle,
                    const RefusalPolicy& policy = {});

// Deterministic split keyed by (seed, question_id): a record goes to the
// evaluation side when its hashed position falls below eval_fraction.
bool in_eval_split(std::uint64_t seed, std::string_view question_id,
                   double eval_fraction);

struct Split {
  std::vector<AlignRecord> train;
  std::vector<AlignRecord> eval;
};
Split split_dataset(const std::vector<AlignRecord>& records, std::uint64_t seed,
                    double eval_fraction);

}  // namespace ualign

#endif  // UALIGN_DATASET_HPP_
