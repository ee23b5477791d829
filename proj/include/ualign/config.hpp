#ifndef UALIGN_CONFIG_HPP_
#define UALIGN_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ualign/align.hpp"
#include "ualign/models.hpp"
#include "ualign/sampling.hpp"
#include "ualign/world.hpp"

namespace ualign {

// Whole-pipeline configuration. Text form is one "key = value" per line
// with '#' comments; print_config() lists every key with its value.
//
// Stage seeds are derived from the global seed by stage name:
// derive_seed(seed, "build-world"), derive_seed(seed, "build-dataset"), ...
// An explicit world.seed overrides the derived world seed.
struct RunConfig {
  std::uint64_t seed = 20240601;
  std::string out_dir = "ualign-out";
  std::string refusal{kDefaultRefusal};
  std::size_t dims = 4096;

  WorldSpec world;
  std::optional<std::uint64_t> world_seed;
  std::string external_dataset;  // pre-built dataset file; skips the world

  SamplingConfig sampling;
  std::string synonyms_path;

  TrainConfig estimator{4000, 0.3, 0, 0};
  TrainConfig reward{10000, 1.5, 0, 0};
  bool reward_use_confidence = true;
  bool reward_use_entropy = true;

  PolicyInitConfig policy_init;
  PpoConfig ppo;
  double kl_ceiling = 2.0;

  double eval_fraction = 0.0;

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);

  // Applies one key; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  std::string print_config() const;

  std::uint64_t stage_seed(std::string_view stage) const;
  // World spec with the effective (derived or explicit) seed.
  WorldSpec effective_world() const;
  SamplingConfig effective_sampling() const;

  // Referenced paths exist, numeric ranges hold.
  void validate() const;
};

}  // namespace ualign

#endif  // UALIGN_CONFIG_HPP_
