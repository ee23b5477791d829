#ifndef UALIGN_WORLD_HPP_
#define UALIGN_WORLD_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ualign/rng.hpp"

namespace ualign {

enum class KnowledgeTier { Known = 0, WeaklyKnown = 1, Unknown = 2 };

std::string_view tier_name(KnowledgeTier tier);
KnowledgeTier parse_tier(std::string_view name);

struct QASample {
  std::string id;
  std::string question;
  std::string reference_answer;
  // Ground truth of the synthetic world. Diagnostics and acceptance checks
  // only; nothing in the pipeline reads it.
  std::optional<KnowledgeTier> tier;

  bool operator==(const QASample&) const = default;
};

// One value per knowledge tier, indexed by KnowledgeTier.
struct TierValues {
  std::array<double, 3> values{};

  double& operator[](KnowledgeTier t) { return values[static_cast<int>(t)]; }
  double operator[](KnowledgeTier t) const {
    return values[static_cast<int>(t)];
  }
  bool operator==(const TierValues&) const = default;
};

struct WorldSpec {
  std::size_t n_questions = 500;
  TierValues tier_mix{{0.30, 0.45, 0.25}};
  std::size_t answer_vocab_size = 6;
  TierValues tier_correct_prob{{0.9, 0.4, 0.0}};
  // Zipf exponent of the distractor distribution: distractor j (1-based)
  // gets mass proportional to j^-dispersion. 0 spreads mass uniformly.
  TierValues dispersion{{1.0, 1.2, 0.3}};
  double exemplar_jitter = 1.0;
  std::uint64_t seed = 7;

  // Throws ConfigError naming the offending field.
  void validate() const;

  // key = value overrides on top of `defaults`, keys as printed by
  // to_key_values().
  static WorldSpec from_key_values(
      const std::map<std::string, std::string>& values,
      const WorldSpec& defaults);
  static WorldSpec from_key_values(
      const std::map<std::string, std::string>& values);
  std::vector<std::pair<std::string, std::string>> to_key_values() const;

  bool operator==(const WorldSpec&) const = default;
};

// The subject model: draws one answer for a question under exemplar index
// k (1-based) at temperature T. Implementations must be pure functions of
// their arguments and the rng state, and safe to share between threads as
// long as each thread owns its rng.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string sample(const QASample& question, int exemplar,
                             double temperature, Rng& rng) const = 0;
};

// Categorical answer model per question: option 0 is the reference answer,
// options 1..V the distractors. Exemplar k adds seeded Gaussian jitter to
// the logits, then the logits are divided by T and normalized.
class SyntheticGenerator : public Generator {
 public:
  SyntheticGenerator() = default;
  SyntheticGenerator(const WorldSpec& spec,
                     const std::vector<QASample>& questions);

  std::string sample(const QASample& question, int exemplar,
                     double temperature, Rng& rng) const override;

  // Probabilities over answer_options(id) for exemplar k at temperature T.
  std::vector<double> answer_distribution(std::string_view question_id,
                                          int exemplar,
                                          double temperature) const;

  // Answer strings; index 0 is the reference in its canonical casing.
  const std::vector<std::string>& answer_options(
      std::string_view question_id) const;

  // Surface form emitted when option 0 is drawn under exemplar k; varies
  // the casing of the reference deterministically.
  std::string correct_surface(std::string_view question_id,
                              int exemplar) const;

 private:
  struct Entry {
    std::vector<std::string> options;
    std::vector<double> base_logits;
  };
  const Entry& entry(std::string_view question_id) const;

  double jitter_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct World {
  std::vector<QASample> questions;
  SyntheticGenerator generator;
};

World build_world(const WorldSpec& spec);

// Line-delimited QASample records.
std::string question_to_line(const QASample& sample);
QASample question_from_line(std::string_view line, std::size_t line_number);
void write_questions(const std::vector<QASample>& questions,
                     const std::string& path);
std::vector<QASample> read_questions(const std::string& path);

}  // namespace ualign

#endif  // UALIGN_WORLD_HPP_
