#include <doctest.h>

#include <bit>
#include <cstring>
#include <limits>

#include "support.hpp"
#include "ualign/text.hpp"

using namespace ualign;

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("normalize_answer folds case, drops punctuation, collapses spaces") {
  CHECK(normalize_answer("  The  U.S.!  ") == "the us");
  CHECK(normalize_answer("Paris") == normalize_answer("paris."));
  CHECK(normalize_answer("...") == "");
  CHECK(normalize_answer("a\t\nb") == "a b");
}

TEST_CASE("normalize_answer is idempotent on random strings") {
  testing::Gen gen(11);
  const std::string alphabet = "aBc D.,!?'-\t";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    const int n = gen.integer(0, 20);
    for (int j = 0; j < n; ++j) s += alphabet[gen.integer(0, alphabet.size() - 1)];
    const std::string once = normalize_answer(s);
    CHECK(normalize_answer(once) == once);
  }
}

TEST_CASE("word_tokens lowercases and strips edge punctuation") {
  const auto t = word_tokens("What is the Capital, of \"France\"?");
  const std::vector<std::string> expected = {"what", "is", "the", "capital", "of", "france"};
  CHECK(t == expected);
  CHECK(word_tokens("  ... ").empty());
}

TEST_CASE("format_real round-trips doubles bit for bit") {
  testing::Gen gen(3);
  std::vector<double> values = {0.0, -0.0, 1.0 / 3.0, 1e-300, 5e-324, 1.7976931348623157e308,
                                std::log(10.0), 0.1 + 0.2};
  for (int i = 0; i < 2000; ++i) {
    std::uint64_t bits = gen.engine()();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    if (std::isfinite(d)) values.push_back(d);
  }
  for (double v : values) {
    const double back = parse_real(format_real(v));
    CHECK(std::bit_cast<std::uint64_t>(back) == std::bit_cast<std::uint64_t>(v));
    CHECK(parse_real(format_shortest(v)) == v);
  }
}

TEST_CASE("parse_real rejects junk") {
  CHECK_THROWS_AS(parse_real(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_real("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_real("abc"), std::invalid_argument);
  CHECK(parse_real("-2.5e3") == -2500.0);
}

TEST_CASE("split keeps empty fields") {
  const auto parts = split("a||b|", '|');
  REQUIRE(parts.size() == 4);
  CHECK(parts[1].empty());
  CHECK(parts[3].empty());
}
