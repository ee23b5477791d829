#ifndef UALIGN_TEXT_HPP_
#define UALIGN_TEXT_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ualign {

// 64-bit FNV-1a (offset 14695981039346656037, prime 1099511628211).
constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t hash = kFnvOffset) {
  for (char c : text) {
    hash ^= static_cast<std::uint8_t>(c);
    hash *= kFnvPrime;
  }
  return hash;
}

std::string trim(std::string_view text);

// Answer normalization shared by PREM matching, refusal detection and the
// default equivalence oracle: ASCII case-fold, delete ASCII punctuation,
// collapse whitespace runs to one space, trim. Non-ASCII bytes pass through.
std::string normalize_answer(std::string_view text);

// Lowercased whitespace-separated tokens with leading/trailing punctuation
// stripped; empty tokens dropped. Used by the hashed feature maps.
std::vector<std::string> word_tokens(std::string_view text);

// Shortest form is not used on purpose: %.17g is what the record and
// checkpoint formats promise.
std::string format_real(double value);
// Shortest string that parses back to the same double; for config text.
std::string format_shortest(double value);
double parse_real(std::string_view text);

std::vector<std::string> split(std::string_view text, char separator);

}  // namespace ualign

#endif  // UALIGN_TEXT_HPP_
