// Independent oracles and small random generators shared by the tests.
#ifndef UALIGN_TESTS_SUPPORT_HPP_
#define UALIGN_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace testing {

// Test-side randomness deliberately uses <random> rather than ualign::Rng.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(engine_); }
  std::vector<double> reals(std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = real(lo, hi);
    return v;
  }
  // Random point on the probability simplex with all entries positive.
  std::vector<double> simplex(std::size_t n) {
    auto v = reals(n, 0.05, 1.0);
    double s = 0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
    return v;
  }
  std::string word(int min_len = 3, int max_len = 7) {
    static const char* letters = "abcdefghijklmnopqrstuvwxyz";
    std::string w;
    const int n = integer(min_len, max_len);
    for (int i = 0; i < n; ++i) w += letters[integer(0, 25)];
    return w;
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Histogram form of -sum p ln p, computed from raw cluster labels.
inline double brute_entropy(const std::vector<std::string>& cluster_labels) {
  std::map<std::string, int> hist;
  for (const auto& s : cluster_labels) ++hist[s];
  const double n = static_cast<double>(cluster_labels.size());
  double h = 0.0;
  for (const auto& [label, count] : hist) {
    const double p = count / n;
    h -= p * std::log(p);
  }
  return h;
}

// O(n^2) pairwise AUROC.
inline double pairwise_auroc(const std::vector<double>& scores, const std::vector<bool>& correct) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!correct[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (correct[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline double brute_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

// Max relative error between an analytic gradient and central differences
// (h = 1e-5) over the listed coordinates. Coordinates where both are tiny
// are compared absolutely.
inline double gradient_error(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x, const std::vector<double>& analytic,
                             const std::vector<std::size_t>& coords, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i : coords) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
  }
  return worst;
}

// Fresh directory under the working directory, emptied first.
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path p = fs::current_path() / "scratch" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace testing

#endif  // UALIGN_TESTS_SUPPORT_HPP_
