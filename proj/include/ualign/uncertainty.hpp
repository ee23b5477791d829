#ifndef UALIGN_UNCERTAINTY_HPP_
#define UALIGN_UNCERTAINTY_HPP_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ualign/sampling.hpp"

namespace ualign {

struct UncertaintySummary {
  double confidence = 0.0;
  double entropy = 0.0;  // nats
  std::vector<std::size_t> cluster_sizes;
};

// Semantic equivalence between two answers. Must be reflexive and
// symmetric; clustering rejects oracles that are not transitive on the
// answers it is given.
class EquivalenceOracle {
 public:
  virtual ~EquivalenceOracle() = default;
  virtual bool equivalent(std::string_view a, std::string_view b) const = 0;
};

// Exact equality of normalize_answer() forms, after mapping each form
// through an optional synonym table (members of one line are equivalent).
class NormalizingOracle : public EquivalenceOracle {
 public:
  NormalizingOracle() = default;
  explicit NormalizingOracle(const std::vector<std::vector<std::string>>& synonyms);

  bool equivalent(std::string_view a, std::string_view b) const override;
  std::string canonical(std::string_view answer) const;

 private:
  std::unordered_map<std::string, std::string> canonical_;
};

// Synonym table file: one cluster per line, members separated by '|'.
// Blank lines and lines starting with '#' are ignored.
std::vector<std::vector<std::string>> read_synonym_table(const std::string& path);
std::vector<std::vector<std::string>> parse_synonym_table(std::string_view text);

struct Partition {
  std::vector<std::size_t> sizes;       // by cluster id
  std::vector<std::size_t> assignment;  // answer index -> cluster id
};

// Cluster ids follow first-occurrence order. Throws ClusteringError with an
// offending triple when the oracle is not transitive on these answers.
Partition cluster_semantic(const std::vector<std::string>& answers,
                           const EquivalenceOracle& oracle);

// Fraction of true labels.
double confidence(const std::vector<bool>& labels);
inline double confidence(const ResponseSet& rs) { return confidence(rs.labels); }

// -sum_s p(s) ln p(s), p(s) = size_s / K.
double semantic_entropy(const std::vector<std::size_t>& cluster_sizes);
inline double semantic_entropy(const Partition& p) {
  return semantic_entropy(p.sizes);
}

UncertaintySummary summarize(const ResponseSet& rs,
                             const EquivalenceOracle& oracle);

}  // namespace ualign

#endif  // UALIGN_UNCERTAINTY_HPP_
