#include "ualign/world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ualign/error.hpp"
#include "ualign/text.hpp"

namespace ualign {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

constexpr std::array<std::string_view, 24> kSyllables = {
    "ka", "ro", "vel", "mi", "tor", "sa", "lun", "dre", "qui", "ban", "os", "ter",
    "fal", "ni", "gor", "ea", "thi", "mar", "zen", "pu", "lo", "cas", "ith", "dun"};

constexpr std::array<std::string_view, 12> kRelations = {
    "capital",  "founder", "currency", "language", "river",   "summit",
    "composer", "author",  "inventor", "emblem",   "harbour", "festival"};

std::string pseudo_word(Rng& rng, int syllables) {
  std::string word;
  for (int i = 0; i < syllables; ++i) word += kSyllables[rng.below(kSyllables.size())];
  word[0] = static_cast<char>(word[0] - 'a' + 'A');
  return word;
}

std::string zero_pad(std::size_t value, int width) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%0*zu", width, value);
  return buffer;
}

std::vector<double> parse_triple(const std::string& key,
                                 const std::string& value) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string item;
  while (in >> item) {
    try {
      out.push_back(parse_real(item));
    } catch (const std::exception&) {
      throw ConfigError(key, "expected three numbers, got '" + value + "'");
    }
  }
  if (out.size() != 3) {
    throw ConfigError(key, "expected three numbers, got '" + value + "'");
  }
  return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto parsed = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a non-negative integer, got '" + value +
                               "'");
  }
}

std::string triple_string(const TierValues& v) {
  return format_shortest(v.values[0]) + " " + format_shortest(v.values[1]) + " " +
         format_shortest(v.values[2]);
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

}  // namespace

std::string_view tier_name(KnowledgeTier tier) {
  switch (tier) {
    case KnowledgeTier::Known:
      return "known";
    case KnowledgeTier::WeaklyKnown:
      return "weakly_known";
    case KnowledgeTier::Unknown:
      return "unknown";
  }
  return "unknown";
}

KnowledgeTier parse_tier(std::string_view name) {
  if (name == "known") return KnowledgeTier::Known;
  if (name == "weakly_known") return KnowledgeTier::WeaklyKnown;
  if (name == "unknown") return KnowledgeTier::Unknown;
  throw ValidationError("tier", "unrecognized tier '" + std::string(name) + "'");
}

void WorldSpec::validate() const {
  if (n_questions == 0) throw ConfigError("n_questions", "must be at least 1");
  double total = 0.0;
  for (double p : tier_mix.values) {
    if (!is_probability(p)) throw ConfigError("tier_mix", "proportions must lie in [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("tier_mix", "proportions must sum to 1 (got " +
                                      format_real(total) + ")");
  }
  if (answer_vocab_size == 0) {
    throw ConfigError("answer_vocab_size", "must be at least 1");
  }
  for (double p : tier_correct_prob.values) {
    if (!is_probability(p)) {
      throw ConfigError("tier_correct_prob", "probabilities must lie in [0,1]");
    }
  }
  for (double d : dispersion.values) {
    if (!std::isfinite(d) || d < 0.0) {
      throw ConfigError("dispersion", "must be finite and non-negative");
    }
  }
  if (!std::isfinite(exemplar_jitter) || exemplar_jitter < 0.0) {
    throw ConfigError("exemplar_jitter", "must be finite and non-negative");
  }
}

WorldSpec WorldSpec::from_key_values(
    const std::map<std::string, std::string>& values) {
  return from_key_values(values, WorldSpec());
}

WorldSpec WorldSpec::from_key_values(
    const std::map<std::string, std::string>& values, const WorldSpec& defaults) {
  WorldSpec spec = defaults;
  for (const auto& [key, value] : values) {
    if (key == "n_questions") {
      spec.n_questions = parse_count(key, value);
    } else if (key == "answer_vocab_size") {
      spec.answer_vocab_size = parse_count(key, value);
    } else if (key == "seed") {
      spec.seed = parse_count(key, value);
    } else if (key == "tier_mix" || key == "tier_correct_prob" ||
               key == "dispersion") {
      auto triple = parse_triple(key, value);
      TierValues& target = key == "tier_mix"            ? spec.tier_mix
                           : key == "tier_correct_prob" ? spec.tier_correct_prob
                                                        : spec.dispersion;
      std::copy(triple.begin(), triple.end(), target.values.begin());
    } else if (key == "exemplar_jitter") {
      try {
        spec.exemplar_jitter = parse_real(value);
      } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + value + "'");
      }
    } else {
      throw ConfigError(key, "unknown world key");
    }
  }
  return spec;
}

std::vector<std::pair<std::string, std::string>> WorldSpec::to_key_values()
    const {
  return {
      {"n_questions", std::to_string(n_questions)},
      {"tier_mix", triple_string(tier_mix)},
      {"answer_vocab_size", std::to_string(answer_vocab_size)},
      {"tier_correct_prob", triple_string(tier_correct_prob)},
      {"dispersion", triple_string(dispersion)},
      {"exemplar_jitter", format_shortest(exemplar_jitter)},
      {"seed", std::to_string(seed)},
  };
}

SyntheticGenerator::SyntheticGenerator(const WorldSpec& spec,
                                       const std::vector<QASample>& questions)
    : jitter_(spec.exemplar_jitter), seed_(spec.seed) {
  entries_.reserve(questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const QASample& q = questions[i];
    const KnowledgeTier tier = q.tier.value_or(KnowledgeTier::Unknown);
    const double p_correct = spec.tier_correct_prob[tier];

    std::vector<double> weights(spec.answer_vocab_size);
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      weights[j] = std::pow(static_cast<double>(j + 1), -spec.dispersion[tier]);
      weight_sum += weights[j];
    }

    Entry e;
    e.options.push_back(q.reference_answer);
    e.base_logits.push_back(p_correct > 0.0 ? std::log(p_correct) : kNegInf);
    for (std::size_t j = 0; j < weights.size(); ++j) {
      e.options.push_back("ans_" + zero_pad(i, 5) + "_" + zero_pad(j + 1, 2));
      const double mass = (1.0 - p_correct) * weights[j] / weight_sum;
      e.base_logits.push_back(mass > 0.0 ? std::log(mass) : kNegInf);
    }
    index_.emplace(q.id, entries_.size());
    entries_.push_back(std::move(e));
  }
}

const SyntheticGenerator::Entry& SyntheticGenerator::entry(
    std::string_view question_id) const {
  auto it = index_.find(std::string(question_id));
  if (it == index_.end()) {
    throw DomainError("generator has no question '" + std::string(question_id) +
                      "'");
  }
  return entries_[it->second];
}

const std::vector<std::string>& SyntheticGenerator::answer_options(
    std::string_view question_id) const {
  return entry(question_id).options;
}

std::vector<double> SyntheticGenerator::answer_distribution(
    std::string_view question_id, int exemplar, double temperature) const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("temperature must be positive, got " +
                      format_real(temperature));
  }
  if (exemplar < 1) {
    throw DomainError("exemplar index must be >= 1, got " +
                      std::to_string(exemplar));
  }
  const Entry& e = entry(question_id);
  Rng jitter_rng(mix_seed(derive_seed(seed_, "jitter"),
                          mix_seed(fnv1a64(question_id),
                                   static_cast<std::uint64_t>(exemplar))));
  std::vector<double> logits(e.base_logits.size());
  double max_logit = kNegInf;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double noise = jitter_rng.normal();
    logits[j] = e.base_logits[j];
    if (std::isfinite(logits[j])) logits[j] = (logits[j] + jitter_ * noise) / temperature;
    max_logit = std::max(max_logit, logits[j]);
  }
  double total = 0.0;
  for (double& l : logits) {
    l = std::isfinite(l) ? std::exp(l - max_logit) : 0.0;
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

std::string SyntheticGenerator::correct_surface(std::string_view question_id,
                                                int exemplar) const {
  std::string text = entry(question_id).options.front();
  const std::uint64_t h =
      mix_seed(derive_seed(seed_, "casing"),
               mix_seed(fnv1a64(question_id), static_cast<std::uint64_t>(exemplar)));
  switch (h % 3) {
    case 1:
      for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      break;
    case 2:
      for (char& c : text) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      break;
    default:
      break;
  }
  return text;
}

std::string SyntheticGenerator::sample(const QASample& question, int exemplar,
                                       double temperature, Rng& rng) const {
  const auto probs = answer_distribution(question.id, exemplar, temperature);
  const std::size_t pick = rng.categorical(probs);
  if (pick == 0) return correct_surface(question.id, exemplar);
  return entry(question.id).options[pick];
}

World build_world(const WorldSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "questions"));

  // Exact tier counts by largest remainder, then a seeded shuffle.
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int t = 0; t < 3; ++t) {
    const double share = spec.tier_mix.values[t] * static_cast<double>(spec.n_questions);
    counts[t] = static_cast<std::size_t>(std::floor(share));
    remainders[t] = share - std::floor(share);
    assigned += counts[t];
  }
  while (assigned < spec.n_questions) {
    int best = 0;
    for (int t = 1; t < 3; ++t) {
      if (remainders[t] > remainders[best]) best = t;
    }
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }
  std::vector<KnowledgeTier> tiers;
  for (int t = 0; t < 3; ++t) {
    tiers.insert(tiers.end(), counts[t], static_cast<KnowledgeTier>(t));
  }
  rng.shuffle(tiers);

  World world;
  world.questions.reserve(spec.n_questions);
  for (std::size_t i = 0; i < spec.n_questions; ++i) {
    QASample q;
    q.id = "q" + zero_pad(i, 5);
    const auto relation = kRelations[rng.below(kRelations.size())];
    const std::string entity = pseudo_word(rng, 2 + static_cast<int>(rng.below(2))) +
                               " " + pseudo_word(rng, 2 + static_cast<int>(rng.below(2)));
    q.question = "What is the " + std::string(relation) + " of " + entity + "?";
    q.reference_answer = pseudo_word(rng, 3);
    q.tier = tiers[i];
    world.questions.push_back(std::move(q));
  }
  world.generator = SyntheticGenerator(spec, world.questions);
  return world;
}

std::string question_to_line(const QASample& sample) {
  nlohmann::ordered_json j;
  j["id"] = sample.id;
  j["question"] = sample.question;
  j["reference_answer"] = sample.reference_answer;
  if (sample.tier) j["tier"] = tier_name(*sample.tier);
  return j.dump();
}

QASample question_from_line(std::string_view line, std::size_t line_number) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(line_number, e.what());
  }
  QASample q;
  try {
    q.id = j.at("id").get<std::string>();
    q.question = j.at("question").get<std::string>();
    q.reference_answer = j.at("reference_answer").get<std::string>();
    if (j.contains("tier")) q.tier = parse_tier(j.at("tier").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(line_number, e.what());
  }
  if (q.id.empty()) throw ValidationError("id", "empty");
  if (q.question.empty() || trim(q.question) != q.question) {
    throw ValidationError("question", "must be non-empty trimmed text");
  }
  if (q.reference_answer.empty() || trim(q.reference_answer) != q.reference_answer) {
    throw ValidationError("reference_answer", "must be non-empty trimmed text");
  }
  return q;
}

void write_questions(const std::vector<QASample>& questions,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (const auto& q : questions) out << question_to_line(q) << '\n';
}

std::vector<QASample> read_questions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<QASample> out;
  std::string line;
  std::size_t n = 0;
  std::unordered_map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    QASample q = question_from_line(line, n);
    if (!seen.emplace(q.id, n).second) {
      throw ValidationError("id", "duplicate id '" + q.id + "' at line " +
                                      std::to_string(n));
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace ualign
