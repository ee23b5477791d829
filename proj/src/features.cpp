#include "ualign/features.hpp"

#include "ualign/error.hpp"
#include "ualign/text.hpp"

namespace ualign {

double dot(std::span<const double> weights, const SparseVector& x) {
  double s = 0.0;
  for (const auto& f : x) s += weights[f.index] * f.value;
  return s;
}

void axpy(double a, const SparseVector& x, std::span<double> y) {
  for (const auto& f : x) y[f.index] += a * f.value;
}

FeatureMap::FeatureMap(std::size_t dims) : dims_(dims) {
  if (dims_ <= kSlots * 2) {
    throw ConfigError("dims", "feature dimension must exceed " +
                                  std::to_string(kSlots * 2));
  }
}

void FeatureMap::add_tokens(SparseVector& x, std::string_view prefix,
                            std::string_view text) const {
  const std::uint64_t buckets = dims_ - kSlots;
  const std::uint64_t seed = fnv1a64(prefix);
  for (const auto& token : word_tokens(text)) {
    const std::uint64_t h = fnv1a64(token, seed);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    x.push_back({static_cast<std::uint32_t>(h % buckets), sign});
  }
}

SparseVector FeatureMap::question(std::string_view question) const {
  SparseVector x;
  add_tokens(x, "q:", question);
  x.push_back({slot(kBias), 1.0});
  return x;
}

SparseVector FeatureMap::candidate(std::string_view question,
                                   std::string_view answer, bool refusal) const {
  SparseVector x;
  add_tokens(x, "q:", question);
  add_tokens(x, "a:", answer);
  if (refusal) x.push_back({slot(kRefusal), 1.0});
  return x;
}

void FeatureMap::add_measures(SparseVector& x, const Measures& m, bool refusal,
                              bool use_confidence, bool use_entropy) const {
  if (use_confidence) {
    x.push_back({slot(kConfidence), m.confidence});
    if (refusal) x.push_back({slot(kRefusalConfidence), m.confidence});
  }
  if (use_entropy) {
    x.push_back({slot(kEntropy), m.entropy});
    if (refusal) x.push_back({slot(kRefusalEntropy), m.entropy});
  }
}

}  // namespace ualign
