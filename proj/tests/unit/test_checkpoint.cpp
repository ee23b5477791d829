#include <doctest.h>

#include <bit>

#include "support.hpp"
#include "ualign/checkpoint.hpp"
#include "ualign/error.hpp"

using namespace ualign;

namespace {

AlignRecord record(const std::string& id, const std::vector<std::string>& answers,
                   const std::string& reference) {
  QASample q{id, "question " + id + "?", reference, std::nullopt};
  ResponseSet rs{id, answers, label_answers(answers, reference)};
  return assemble(q, rs, summarize(rs, NormalizingOracle()));
}

// Awkward doubles: subnormals, negative zero, long mantissas.
std::vector<double> awkward(testing::Gen& gen, std::size_t n) {
  std::vector<double> v = gen.reals(n, -3.0, 3.0);
  v[0] = -0.0;
  if (n > 1) v[1] = 4.9e-324;
  if (n > 2) v[2] = 1.0 / 3.0;
  if (n > 3) v[3] = -1.7976931348623157e308;
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("estimator checkpoints round-trip bit-exactly") {
  testing::Gen gen(1);
  for (auto target : {UncertaintyTarget::Confidence, UncertaintyTarget::Entropy}) {
    BinnedEstimator est(target, FeatureMap(16), 7);
    est.weights() = awkward(gen, est.weights().size());
    est.seed = 123456789012345ull;
    const std::string text = serialize_estimator(est);
    const BinnedEstimator back = parse_estimator(text);
    CHECK(bit_equal(back.weights(), est.weights()));
    CHECK(back.target() == target);
    CHECK(back.samples_per_question() == 7);
    CHECK(back.seed == est.seed);
    CHECK(serialize_estimator(back) == text);
  }
}

TEST_CASE("reward and policy checkpoints round-trip bit-exactly") {
  testing::Gen gen(2);
  RewardOptions options;
  options.use_entropy = false;
  RewardModel rm(FeatureMap(32), options);
  rm.weights() = awkward(gen, 32);
  rm.bias = -0.1;
  rm.seed = 9;
  const RewardModel back = parse_reward(serialize_reward(rm));
  CHECK(bit_equal(back.weights(), rm.weights()));
  CHECK(back.bias == rm.bias);
  CHECK(back.options().use_confidence);
  CHECK_FALSE(back.options().use_entropy);
  CHECK(back.options().refusal_string == rm.options().refusal_string);

  const std::vector<AlignRecord> records = {record("a", {"x", "y"}, "x"), record("b", {"z"}, "w")};
  PolicyState ps(records, FeatureMap(32), {});
  ps.weights = awkward(gen, 32);
  ps.reference_weights = gen.reals(32, -1, 1);
  PolicyState loaded(records, FeatureMap(32), {});
  load_policy_weights(serialize_policy(ps, 4), loaded);
  CHECK(bit_equal(loaded.weights, ps.weights));
  CHECK(bit_equal(loaded.reference_weights, ps.reference_weights));

  PolicyState other({records[0]}, FeatureMap(32), {});
  CHECK_THROWS_AS(load_policy_weights(serialize_policy(ps, 4), other), ValidationError);
  PolicyState wide(records, FeatureMap(64), {});
  CHECK_THROWS_AS(load_policy_weights(serialize_policy(ps, 4), wide), ValidationError);
}

TEST_CASE("malformed checkpoints") {
  BinnedEstimator est(UncertaintyTarget::Confidence, FeatureMap(16), 10);
  const std::string good = serialize_estimator(est);
  CHECK_THROWS_AS(parse_estimator("nonsense\n"), LoadError);
  CHECK_THROWS_AS(parse_reward(good), ValidationError);  // wrong kind

  std::string truncated = good.substr(0, good.rfind('\n', good.size() - 2) + 1);
  CHECK_THROWS_AS(parse_estimator(truncated), LoadError);

  std::string bad_number = good;
  bad_number.replace(bad_number.rfind("0 0"), 1, "x");
  CHECK_THROWS_AS(parse_estimator(bad_number), LoadError);

  std::string bad_hash = good;
  const auto pos = bad_hash.find("hash ");
  bad_hash.replace(pos, bad_hash.find('\n', pos) - pos, "hash murmur3");
  CHECK_THROWS_AS(parse_estimator(bad_hash), ValidationError);
}

TEST_CASE("text files") {
  const std::string dir = testing::scratch_dir("checkpoint_files");
  const std::string path = dir + "/x.txt";
  write_text_file(path, std::string("a\0b\n", 4));
  CHECK(read_text_file(path) == std::string("a\0b\n", 4));
  CHECK_THROWS_AS(read_text_file(dir + "/missing"), Error);
  CHECK_THROWS_AS(write_text_file(dir + "/no/such/dir/x", "y"), Error);
}
