#ifndef UALIGN_FEATURES_HPP_
#define UALIGN_FEATURES_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace ualign {

struct Feature {
  std::uint32_t index;
  double value;
};
using SparseVector = std::vector<Feature>;

double dot(std::span<const double> weights, const SparseVector& x);
// y += a * x
void axpy(double a, const SparseVector& x, std::span<double> y);

struct Measures {
  double confidence = 0.0;
  double entropy = 0.0;
};

// Signed feature hashing of lowercased word tokens into the first
// dims - kSlots buckets; the last kSlots indices are fixed scalar slots.
// Bucket and sign come from 64-bit FNV-1a of a namespace prefix plus the
// token, so the map is identical across runs and platforms.
class FeatureMap {
 public:
  enum Slot : std::uint32_t {
    kBias = 0,
    kConfidence,
    kEntropy,
    kRefusal,
    kRefusalConfidence,
    kRefusalEntropy,
    kSlotCount
  };
  static constexpr std::size_t kSlots = kSlotCount;
  static constexpr std::string_view kHashId = "fnv1a64";

  explicit FeatureMap(std::size_t dims = 4096);

  std::size_t dims() const { return dims_; }
  std::uint32_t slot(Slot s) const {
    return static_cast<std::uint32_t>(dims_ - kSlots + s);
  }

  // Question tokens plus the bias slot (input of the uncertainty estimators).
  SparseVector question(std::string_view question) const;

  // Question tokens, answer tokens and the refusal indicator; no measures.
  SparseVector candidate(std::string_view question, std::string_view answer,
                         bool refusal) const;

  // Confidence/entropy slots, and their refusal crosses when `refusal`.
  void add_measures(SparseVector& x, const Measures& m, bool refusal,
                    bool use_confidence, bool use_entropy) const;

  bool operator==(const FeatureMap&) const = default;

 private:
  void add_tokens(SparseVector& x, std::string_view prefix,
                  std::string_view text) const;

  std::size_t dims_;
};

}  // namespace ualign

#endif  // UALIGN_FEATURES_HPP_
