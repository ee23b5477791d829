#include <doctest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"
#include "ualign/align.hpp"
#include "ualign/checkpoint.hpp"
#include "ualign/config.hpp"
#include "ualign/error.hpp"

using namespace ualign;

namespace {

AlignRecord record(const std::string& id, const std::string& question,
                   const std::vector<std::string>& answers, const std::string& reference) {
  QASample q{id, question, reference, std::nullopt};
  ResponseSet rs{id, answers, label_answers(answers, reference)};
  return assemble(q, rs, summarize(rs, NormalizingOracle()));
}

// A small world with every Stage-1 artifact trained, shared across cases.
struct Fixture {
  std::vector<AlignRecord> records;
  BinnedEstimator c_model{UncertaintyTarget::Confidence, FeatureMap(512), 10};
  BinnedEstimator e_model{UncertaintyTarget::Entropy, FeatureMap(512), 10};
  RewardModel reward{FeatureMap(512)};
  PolicyState initial{{}, FeatureMap(512), {}};

  Fixture() {
    RunConfig config;
    config.seed = 5;
    config.world.n_questions = 120;
    const World world = build_world(config.effective_world());
    records = build_dataset(world.generator, world.questions, config.effective_sampling(),
                            NormalizingOracle());
    const FeatureMap features(512);
    c_model = train_estimator(records, UncertaintyTarget::Confidence, {1500, 0.3, 0, 1}, features);
    e_model = train_estimator(records, UncertaintyTarget::Entropy, {1500, 0.3, 0, 1}, features);
    reward = train_reward(records, {3000, 1.5, 0, 1}, {}, features);
    initial = init_policy(records, config.policy_init, features);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

PpoConfig small_ppo(double beta, std::size_t epochs) {
  PpoConfig cfg;
  cfg.beta = beta;
  cfg.epochs = epochs;
  cfg.batch_size = 24;
  cfg.seed = 77;
  return cfg;
}

std::vector<Rollout> random_rollouts(testing::Gen& gen, const PolicyState& policy,
                                     std::span<const double> w, bool outside_clip) {
  std::vector<Rollout> out;
  const int n = gen.integer(1, 4);
  for (int i = 0; i < n; ++i) {
    Rollout r;
    r.question = static_cast<std::size_t>(gen.integer(0, static_cast<int>(policy.size()) - 1));
    r.measures = {gen.integer(0, 10) / 10.0, gen.real(0.0, 2.0)};
    const auto p = policy.probabilities(r.question, r.measures, w);
    r.action = static_cast<std::size_t>(gen.integer(0, static_cast<int>(p.size()) - 1));
    // Ratios kept away from the clip boundaries so the objective is smooth
    // around w.
    const double ratio = outside_clip ? (gen.coin() ? 1.6 : 0.5) : gen.real(0.9, 1.1);
    r.old_probability = p[r.action] / ratio;
    r.advantage = gen.real(-1.0, 1.0);
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("KL examples and the brute-force oracle") {
  const std::vector<double> p = {0.2, 0.3, 0.5};
  CHECK(kl_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(kl_divergence(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  testing::Gen gen(3);
  for (int i = 0; i < 100; ++i) {
    const auto a = gen.simplex(4);
    const auto b = gen.simplex(4);
    CHECK(std::abs(kl_divergence(a, b) - testing::brute_kl(a, b)) <= 1e-12);
    CHECK(kl_divergence(a, b) >= 0.0);
  }
  // Zero reference mass stays finite thanks to the floor.
  CHECK(std::isfinite(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0})));
  CHECK_THROWS_AS(kl_divergence(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), DomainError);
}

TEST_CASE("candidate sets: sampled answers, reference, refusal, deduplicated") {
  const auto r = record("q1", "capital?", {"Paris", "paris", "Rome", "Paris."}, "PARIS");
  PolicyState ps({r}, FeatureMap(64), {});
  REQUIRE(ps.size() == 1);
  const auto& c = ps.questions()[0].candidates;
  REQUIRE(c.size() == 3);
  CHECK(c[0] == "Paris");
  CHECK(c[1] == "Rome");
  CHECK(c[2] == std::string(kDefaultRefusal));
  CHECK(ps.questions()[0].refusal[2]);
  CHECK(ps.index_of("q1") == 0);
  CHECK_THROWS_AS(ps.index_of("nope"), DomainError);
}

TEST_CASE("init fits sampled frequencies") {
  const auto all_a = record("q1", "first question here", std::vector<std::string>(10, "A"), "B");
  std::vector<std::string> mixed;
  for (int i = 0; i < 5; ++i) mixed.insert(mixed.end(), {"C", "D"});
  const auto even = record("q2", "second one over there", mixed, "E");
  PolicyInitConfig cfg{600, 0.5, 0.1, 0};
  const PolicyState ps = init_policy({all_a, even}, cfg, FeatureMap(256));
  const auto p0 = ps.reference_probabilities(0);
  CHECK(p0[0] >= 0.9);
  const auto p1 = ps.reference_probabilities(1);
  REQUIRE(p1.size() == 4);
  CHECK(std::abs(p1[0] - p1[1]) < 0.05);
  CHECK(p1[0] > 0.4);
  CHECK(p1[2] < 0.1);
  CHECK(p1[3] < 0.1);
  const PolicyState again = init_policy({all_a, even}, cfg, FeatureMap(256));
  CHECK(again.weights == ps.weights);
  CHECK(ps.weights == ps.reference_weights);
  CHECK_THROWS_AS(init_policy({}, cfg, FeatureMap(64)), InitializationError);
}

TEST_CASE("reference policy ignores the measure slots") {
  const auto& f = fixture();
  PolicyState ps = f.initial;
  const auto ref = ps.reference_probabilities(3);
  // Reference equals the current policy evaluated at any measures while the
  // weights are still the initial copy, because measure slots start at zero.
  for (double c : {0.0, 0.5, 1.0}) {
    const auto cur = ps.probabilities(3, {c, 0.7});
    for (std::size_t j = 0; j < ref.size(); ++j) CHECK(cur[j] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
}

TEST_CASE("surrogate gradients match central differences") {
  const auto& f = fixture();
  testing::Gen gen(11);
  const FeatureMap small(48);
  const std::vector<AlignRecord> subset(f.records.begin(), f.records.begin() + 6);
  PolicyState ps(subset, small, {});
  std::vector<std::size_t> coords(small.dims());
  std::iota(coords.begin(), coords.end(), 0);
  for (int trial = 0; trial < 24; ++trial) {
    const bool clipped = trial % 2 == 0;
    const bool outside = trial % 4 == 0;
    const double beta = trial % 3 == 0 ? 0.0 : gen.real(0.05, 2.0);
    const auto w = gen.reals(small.dims(), -0.5, 0.5);
    ps.reference_weights = gen.reals(small.dims(), -0.5, 0.5);
    const auto rollouts = random_rollouts(gen, ps, w, outside);
    const auto grad = surrogate_gradient(ps, w, rollouts, 0.2, clipped, beta);
    const double err = testing::gradient_error(
        [&](const std::vector<double>& v) {
          return surrogate_objective(ps, v, rollouts, 0.2, clipped, beta);
        },
        w, grad, coords);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("clip inertness inside the trust region") {
  const auto& f = fixture();
  testing::Gen gen(12);
  const PolicyState& ps = f.initial;
  for (int trial = 0; trial < 10; ++trial) {
    const auto w = ps.weights;
    const auto rollouts = random_rollouts(gen, ps, w, false);
    for (double beta : {0.0, 0.3}) {
      const auto a = surrogate_gradient(ps, w, rollouts, 0.2, true, beta);
      const auto b = surrogate_gradient(ps, w, rollouts, 0.2, false, beta);
      CHECK(a == b);
    }
  }
}

TEST_CASE("positive advantage raises the sampled candidate") {
  const auto& f = fixture();
  testing::Gen gen(13);
  const PolicyState& ps = f.initial;
  for (int trial = 0; trial < 20; ++trial) {
    Rollout r;
    r.question = static_cast<std::size_t>(gen.integer(0, static_cast<int>(ps.size()) - 1));
    r.measures = {0.3, 0.9};
    const auto p = ps.probabilities(r.question, r.measures);
    r.action = static_cast<std::size_t>(gen.integer(0, static_cast<int>(p.size()) - 1));
    r.old_probability = p[r.action];
    r.advantage = gen.real(0.1, 1.0);
    const std::vector<Rollout> batch = {r};
    const auto grad = surrogate_gradient(ps, ps.weights, batch, 0.2, true, 0.0);
    std::vector<double> w = ps.weights;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += 0.01 * grad[i];
    CHECK(ps.probabilities(r.question, r.measures, w)[r.action] > p[r.action]);
  }
}

TEST_CASE("zero epochs returns the initial policy") {
  const auto& f = fixture();
  const auto result = align(f.initial, f.reward, f.c_model, f.e_model, small_ppo(0.1, 0));
  CHECK(result.policy.weights == f.initial.weights);
  CHECK(result.policy.reference_weights == f.initial.reference_weights);
  CHECK(result.curve.empty());
}

TEST_CASE("align: simplex, frozen models, KL bookkeeping, reward rises") {
  const auto& f = fixture();
  const BinnedEstimator c_before = f.c_model;
  const BinnedEstimator e_before = f.e_model;
  const RewardModel r_before = f.reward;
  const auto result = align(f.initial, f.reward, f.c_model, f.e_model, small_ppo(0.1, 12));
  CHECK(serialize_estimator(c_before) == serialize_estimator(f.c_model));
  CHECK(serialize_estimator(e_before) == serialize_estimator(f.e_model));
  CHECK(serialize_reward(r_before) == serialize_reward(f.reward));
  CHECK(result.policy.reference_weights == f.initial.reference_weights);

  std::vector<Measures> measures;
  for (const auto& q : result.policy.questions()) {
    measures.push_back(predict_uncertainty(f.c_model, f.e_model, q.question));
  }
  for (std::size_t q = 0; q < result.policy.size(); ++q) {
    const auto p = result.policy.probabilities(q, measures[q]);
    double total = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }

  // Recompute the final KL from a checkpoint round trip.
  PolicyState reloaded(f.records, f.initial.features(), f.initial.refusal());
  load_policy_weights(serialize_policy(result.policy, 0), reloaded);
  REQUIRE(!result.curve.empty());
  CHECK(std::abs(mean_kl(reloaded, measures) - result.curve.back().mean_kl) <= 1e-9);

  const std::size_t steps_per_epoch = result.curve.size() / 12;
  double first = 0, last = 0;
  for (std::size_t i = 0; i < steps_per_epoch; ++i) {
    first += result.curve[i].mean_r1;
    last += result.curve[result.curve.size() - 1 - i].mean_r1;
  }
  CHECK(last > first);
  for (const auto& s : result.curve) {
    CHECK(s.mean_r <= s.mean_r1 + 1e-15);
    CHECK(s.mean_r2 >= 0.0);
  }
}

TEST_CASE("a large KL coefficient keeps the policy closer to the reference") {
  const auto& f = fixture();
  // 120 questions in batches of 24: 5 steps per epoch, 50 steps in total.
  const auto loose = align(f.initial, f.reward, f.c_model, f.e_model, small_ppo(0.1, 10));
  const auto tight = align(f.initial, f.reward, f.c_model, f.e_model, small_ppo(100.0, 10));
  REQUIRE(loose.curve.size() == 50);
  CHECK(tight.curve.back().mean_kl <= loose.curve.back().mean_kl);
}

TEST_CASE("align is deterministic and honors the training subset") {
  const auto& f = fixture();
  const auto a = align(f.initial, f.reward, f.c_model, f.e_model, small_ppo(0.1, 2));
  const auto b = align(f.initial, f.reward, f.c_model, f.e_model, small_ppo(0.1, 2));
  CHECK(a.policy.weights == b.policy.weights);
  const auto sub = align(f.initial, f.reward, f.c_model, f.e_model, small_ppo(0.1, 2), {0, 1, 2});
  CHECK(sub.curve.size() == 2);
  CHECK_THROWS_AS(align(f.initial, f.reward, f.c_model, f.e_model, small_ppo(0.1, 1), {100000}),
                  DomainError);
}

TEST_CASE("PPO config validation") {
  PpoConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.clip = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.beta = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
