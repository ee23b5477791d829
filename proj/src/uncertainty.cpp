#include "ualign/uncertainty.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

#include "ualign/error.hpp"
#include "ualign/text.hpp"

namespace ualign {

NormalizingOracle::NormalizingOracle(
    const std::vector<std::vector<std::string>>& synonyms) {
  for (const auto& cluster : synonyms) {
    if (cluster.empty()) continue;
    // First member that is already mapped keeps lines that share a member
    // in one cluster.
    std::string head = normalize_answer(cluster.front());
    for (const auto& member : cluster) {
      auto it = canonical_.find(normalize_answer(member));
      if (it != canonical_.end()) {
        head = it->second;
        break;
      }
    }
    for (const auto& member : cluster) {
      const std::string key = normalize_answer(member);
      auto it = canonical_.find(key);
      if (it != canonical_.end() && it->second != head) {
        const std::string old = it->second;
        for (auto& [k, v] : canonical_) {
          if (v == old) v = head;
        }
      }
      canonical_[key] = head;
    }
  }
}

std::string NormalizingOracle::canonical(std::string_view answer) const {
  std::string key = normalize_answer(answer);
  auto it = canonical_.find(key);
  return it == canonical_.end() ? key : it->second;
}

bool NormalizingOracle::equivalent(std::string_view a, std::string_view b) const {
  return canonical(a) == canonical(b);
}

std::vector<std::vector<std::string>> parse_synonym_table(std::string_view text) {
  std::vector<std::vector<std::string>> table;
  for (const auto& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> members;
    for (const auto& m : split(line, '|')) {
      std::string member = trim(m);
      if (!member.empty()) members.push_back(std::move(member));
    }
    if (!members.empty()) table.push_back(std::move(members));
  }
  return table;
}

std::vector<std::vector<std::string>> read_synonym_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open synonym table '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_synonym_table(buffer.str());
}

Partition cluster_semantic(const std::vector<std::string>& answers,
                           const EquivalenceOracle& oracle) {
  const std::size_t n = answers.size();
  if (n == 0) throw DomainError("cannot cluster an empty answer list");

  std::vector<std::vector<bool>> eq(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    eq[i][i] = true;
    for (std::size_t j = i + 1; j < n; ++j) {
      eq[i][j] = eq[j][i] = oracle.equivalent(answers[i], answers[j]);
    }
  }

  Partition p;
  p.assignment.assign(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (p.assignment[i] != n) continue;
    const std::size_t id = p.sizes.size();
    p.sizes.push_back(0);
    // Connected component of i under the equivalence graph.
    std::queue<std::size_t> frontier;
    frontier.push(i);
    p.assignment[i] = id;
    while (!frontier.empty()) {
      const std::size_t u = frontier.front();
      frontier.pop();
      ++p.sizes[id];
      for (std::size_t v = 0; v < n; ++v) {
        if (eq[u][v] && p.assignment[v] == n) {
          p.assignment[v] = id;
          frontier.push(v);
        }
      }
    }
  }

  // Every component must be a clique; otherwise a shortest path between a
  // non-equivalent pair yields a witness triple.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t c = a + 1; c < n; ++c) {
      if (p.assignment[a] != p.assignment[c] || eq[a][c]) continue;
      std::vector<std::size_t> parent(n, n);
      std::queue<std::size_t> frontier;
      frontier.push(a);
      parent[a] = a;
      while (!frontier.empty() && parent[c] == n) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v = 0; v < n; ++v) {
          if (eq[u][v] && parent[v] == n) {
            parent[v] = u;
            frontier.push(v);
          }
        }
      }
      std::vector<std::size_t> path{c};
      while (path.back() != a) path.push_back(parent[path.back()]);
      const std::size_t x = path[path.size() - 1];
      const std::size_t y = path[path.size() - 2];
      const std::size_t z = path[path.size() - 3];
      throw ClusteringError(
          x, y, z,
          "equivalence oracle is not transitive: '" + answers[x] + "' ~ '" +
              answers[y] + "' and '" + answers[y] + "' ~ '" + answers[z] +
              "' but not '" + answers[x] + "' ~ '" + answers[z] + "'");
    }
  }
  return p;
}

double confidence(const std::vector<bool>& labels) {
  if (labels.empty()) throw DomainError("confidence needs at least one label");
  std::size_t correct = 0;
  for (bool z : labels) correct += z ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double semantic_entropy(const std::vector<std::size_t>& cluster_sizes) {
  const std::size_t k =
      std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0});
  if (k == 0) throw DomainError("semantic entropy needs at least one answer");
  const double total = static_cast<double>(k);
  double h = 0.0;
  for (std::size_t size : cluster_sizes) {
    if (size == 0) continue;
    const double p = static_cast<double>(size) / total;
    h -= p * std::log(p);
  }
  // A single cluster gives -1*ln(1) = -0.0.
  return h == 0.0 ? 0.0 : h;
}

UncertaintySummary summarize(const ResponseSet& rs,
                             const EquivalenceOracle& oracle) {
  if (rs.answers.size() != rs.labels.size()) {
    throw DomainError("response set for " + rs.question_id +
                      " has mismatched answers and labels");
  }
  Partition p = cluster_semantic(rs.answers, oracle);
  UncertaintySummary s;
  s.confidence = confidence(rs.labels);
  s.entropy = semantic_entropy(p.sizes);
  s.cluster_sizes = std::move(p.sizes);
  return s;
}

}  // namespace ualign
