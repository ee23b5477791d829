#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "ualign/config.hpp"
#include "ualign/error.hpp"
#include "ualign/rng.hpp"

using namespace ualign;

TEST_CASE("print-config round-trips through parse") {
  RunConfig config;
  config.seed = 99;
  config.ppo.beta = 0.25;
  config.world.n_questions = 37;
  config.world_seed = 11;
  config.reward_use_entropy = false;
  const std::string text = config.print_config();
  const RunConfig back = RunConfig::parse(text);
  CHECK(back.print_config() == text);
  CHECK(back.seed == 99);
  CHECK(back.ppo.beta == 0.25);
  CHECK(back.world.n_questions == 37);
  CHECK(back.effective_world().seed == 11);
  CHECK_FALSE(back.reward_use_entropy);
}

TEST_CASE("defaults parse from an empty file") {
  const RunConfig config = RunConfig::parse("# nothing but a comment\n\n");
  CHECK(config.print_config() == RunConfig().print_config());
}

TEST_CASE("shipped default config matches the built-in defaults") {
  RunConfig shipped = RunConfig::load(UALIGN_SOURCE_DIR "/configs/default.conf");
  shipped.out_dir = RunConfig().out_dir;
  CHECK(shipped.print_config() == RunConfig().print_config());
}

TEST_CASE("stage seeds are keyed by stage name") {
  RunConfig config;
  CHECK(config.stage_seed("align") == derive_seed(config.seed, "align"));
  CHECK(config.stage_seed("align") != config.stage_seed("evaluate"));
  CHECK(config.effective_world().seed == derive_seed(config.seed, "build-world"));
  CHECK(config.effective_sampling().seed == derive_seed(config.seed, "build-dataset"));
  config.seed = 1;
  const auto a = config.effective_world().seed;
  config.seed = 2;
  CHECK(config.effective_world().seed != a);
}

TEST_CASE("bad configuration is rejected with the key named") {
  auto field_of = [](const std::string& text) {
    try {
      RunConfig::parse(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of("bogus = 1") == "bogus");
  CHECK(field_of("seed = -3") == "seed");
  CHECK(field_of("seed = 12abc") == "seed");
  CHECK(field_of("ppo.beta = fast") == "ppo.beta");
  CHECK(field_of("reward.use_entropy = maybe") == "reward.use_entropy");
  CHECK(field_of("world.n_questions = many") == "world.n_questions");
  CHECK(field_of("world.nope = 1") == "world.nope");
  CHECK(field_of("refusal =") == "refusal");
  CHECK(field_of("just words") == "line 1");

  try {
    RunConfig::parse("world.n_questions = many");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("config error: world.n_questions: ") == 0);
    CHECK(std::string(e.what()).find("config error", 5) == std::string::npos);
  }
}

TEST_CASE("validate checks paths and ranges") {
  RunConfig config;
  CHECK_NOTHROW(config.validate());
  config.external_dataset = "/definitely/not/here.jsonl";
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.synonyms_path = "/definitely/not/here.txt";
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.eval_fraction = 1.0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.kl_ceiling = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.ppo.clip = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.sampling.k = 0;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.out_dir.clear();
  CHECK_THROWS_AS(config.validate(), ConfigError);
  CHECK_THROWS_AS(RunConfig::load("/definitely/not/here.conf"), ConfigError);
}
