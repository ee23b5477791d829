#include "ualign/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "ualign/error.hpp"
#include "ualign/text.hpp"

namespace ualign {

namespace {

std::uint64_t to_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(value, &used);
    if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
  }
}

double to_real(const std::string& key, const std::string& value) {
  try {
    return parse_real(value);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + value + "'");
}

std::string yes_no(bool v) { return v ? "true" : "false"; }

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") {
    seed = to_count(key, value);
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "refusal") {
    if (value.empty()) throw ConfigError(key, "refusal string must not be empty");
    refusal = value;
  } else if (key == "features.dims") {
    dims = to_count(key, value);
  } else if (key.rfind("world.", 0) == 0) {
    const std::string sub = key.substr(6);
    if (sub == "seed") {
      world_seed = to_count(key, value);
    } else {
      try {
        world = WorldSpec::from_key_values({{sub, value}}, world);
      } catch (const ConfigError& e) {
        const std::string prefix = "config error: " + e.field() + ": ";
        std::string message = e.what();
        if (message.rfind(prefix, 0) == 0) message = message.substr(prefix.size());
        throw ConfigError(key, message);
      }
    }
  } else if (key == "dataset.external") {
    external_dataset = value;
  } else if (key == "sampling.k") {
    sampling.k = static_cast<int>(to_count(key, value));
  } else if (key == "sampling.temperature") {
    sampling.temperature = to_real(key, value);
  } else if (key == "oracle.synonyms") {
    synonyms_path = value;
  } else if (key == "estimator.epochs") {
    estimator.epochs = to_count(key, value);
  } else if (key == "estimator.learning_rate") {
    estimator.learning_rate = to_real(key, value);
  } else if (key == "estimator.batch_size") {
    estimator.batch_size = to_count(key, value);
  } else if (key == "reward.epochs") {
    reward.epochs = to_count(key, value);
  } else if (key == "reward.learning_rate") {
    reward.learning_rate = to_real(key, value);
  } else if (key == "reward.batch_size") {
    reward.batch_size = to_count(key, value);
  } else if (key == "reward.use_confidence") {
    reward_use_confidence = to_bool(key, value);
  } else if (key == "reward.use_entropy") {
    reward_use_entropy = to_bool(key, value);
  } else if (key == "policy.init_epochs") {
    policy_init.epochs = to_count(key, value);
  } else if (key == "policy.init_learning_rate") {
    policy_init.learning_rate = to_real(key, value);
  } else if (key == "policy.smoothing") {
    policy_init.smoothing = to_real(key, value);
  } else if (key == "ppo.clip") {
    ppo.clip = to_real(key, value);
  } else if (key == "ppo.learning_rate") {
    ppo.learning_rate = to_real(key, value);
  } else if (key == "ppo.inner_epochs") {
    ppo.inner_epochs = to_count(key, value);
  } else if (key == "ppo.batch_size") {
    ppo.batch_size = to_count(key, value);
  } else if (key == "ppo.beta") {
    ppo.beta = to_real(key, value);
  } else if (key == "ppo.epochs") {
    ppo.epochs = to_count(key, value);
  } else if (key == "ppo.baseline_momentum") {
    ppo.baseline_momentum = to_real(key, value);
  } else if (key == "ppo.kl_ceiling") {
    kl_ceiling = to_real(key, value);
  } else if (key == "eval.fraction") {
    eval_fraction = to_real(key, value);
  } else {
    throw ConfigError(key, "unknown configuration key");
  }
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig config;
  std::size_t line_number = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_number;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_number), "expected 'key = value'");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string RunConfig::print_config() const {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"seed", std::to_string(seed)},
      {"out", out_dir},
      {"refusal", refusal},
      {"features.dims", std::to_string(dims)},
  };
  for (const auto& [k, v] : world.to_key_values()) {
    if (k == "seed") continue;
    kv.emplace_back("world." + k, v);
  }
  kv.emplace_back("world.seed", std::to_string(effective_world().seed));
  kv.emplace_back("dataset.external", external_dataset);
  kv.emplace_back("sampling.k", std::to_string(sampling.k));
  kv.emplace_back("sampling.temperature", format_shortest(sampling.temperature));
  kv.emplace_back("oracle.synonyms", synonyms_path);
  kv.emplace_back("estimator.epochs", std::to_string(estimator.epochs));
  kv.emplace_back("estimator.learning_rate", format_shortest(estimator.learning_rate));
  kv.emplace_back("estimator.batch_size", std::to_string(estimator.batch_size));
  kv.emplace_back("reward.epochs", std::to_string(reward.epochs));
  kv.emplace_back("reward.learning_rate", format_shortest(reward.learning_rate));
  kv.emplace_back("reward.batch_size", std::to_string(reward.batch_size));
  kv.emplace_back("reward.use_confidence", yes_no(reward_use_confidence));
  kv.emplace_back("reward.use_entropy", yes_no(reward_use_entropy));
  kv.emplace_back("policy.init_epochs", std::to_string(policy_init.epochs));
  kv.emplace_back("policy.init_learning_rate", format_shortest(policy_init.learning_rate));
  kv.emplace_back("policy.smoothing", format_shortest(policy_init.smoothing));
  kv.emplace_back("ppo.clip", format_shortest(ppo.clip));
  kv.emplace_back("ppo.learning_rate", format_shortest(ppo.learning_rate));
  kv.emplace_back("ppo.inner_epochs", std::to_string(ppo.inner_epochs));
  kv.emplace_back("ppo.batch_size", std::to_string(ppo.batch_size));
  kv.emplace_back("ppo.beta", format_shortest(ppo.beta));
  kv.emplace_back("ppo.epochs", std::to_string(ppo.epochs));
  kv.emplace_back("ppo.baseline_momentum", format_shortest(ppo.baseline_momentum));
  kv.emplace_back("ppo.kl_ceiling", format_shortest(kl_ceiling));
  kv.emplace_back("eval.fraction", format_shortest(eval_fraction));

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::stage_seed(std::string_view stage) const {
  return derive_seed(seed, stage);
}

WorldSpec RunConfig::effective_world() const {
  WorldSpec spec = world;
  spec.seed = world_seed.value_or(stage_seed("build-world"));
  return spec;
}

SamplingConfig RunConfig::effective_sampling() const {
  SamplingConfig s = sampling;
  s.seed = stage_seed("build-dataset");
  return s;
}

void RunConfig::validate() const {
  if (external_dataset.empty()) {
    effective_world().validate();
  } else if (!std::filesystem::exists(external_dataset)) {
    throw ConfigError("dataset.external", "file '" + external_dataset + "' does not exist");
  }
  if (!synonyms_path.empty() && !std::filesystem::exists(synonyms_path)) {
    throw ConfigError("oracle.synonyms", "file '" + synonyms_path + "' does not exist");
  }
  sampling.validate();
  ppo.validate();
  FeatureMap check(dims);
  if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) {
    throw ConfigError("eval.fraction", "must lie in [0, 1)");
  }
  if (!(kl_ceiling > 0.0)) throw ConfigError("ppo.kl_ceiling", "must be positive");
  if (out_dir.empty()) throw ConfigError("out", "output directory must be set");
}

}  // namespace ualign
