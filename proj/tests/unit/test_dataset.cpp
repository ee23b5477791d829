#include <doctest.h>

#include <bit>
#include <cmath>

#include "support.hpp"
#include "ualign/dataset.hpp"
#include "ualign/error.hpp"

using namespace ualign;

namespace {

QASample question(const std::string& id = "q1") { return {id, "What is the capital of Zed?", "Zedville", std::nullopt}; }

AlignRecord make(const std::vector<std::string>& answers) {
  const QASample q = question();
  ResponseSet rs{q.id, answers, label_answers(answers, q.reference_answer)};
  return assemble(q, rs, summarize(rs, NormalizingOracle()));
}

std::vector<AlignRecord> random_records(testing::Gen& gen, int n) {
  std::vector<AlignRecord> out;
  for (int i = 0; i < n; ++i) {
    QASample q{"q" + std::to_string(i), "Question \"" + gen.word() + "\"?\n", gen.word(), std::nullopt};
    q.question = "Question " + gen.word() + " \\ \"quoted\" é?";
    ResponseSet rs{q.id, {}, {}};
    const int k = gen.integer(1, 12);
    for (int j = 0; j < k; ++j) rs.answers.push_back(gen.coin(0.3) ? q.reference_answer : gen.word());
    rs.labels = label_answers(rs.answers, q.reference_answer);
    out.push_back(assemble(q, rs, summarize(rs, NormalizingOracle())));
  }
  return out;
}

}  // namespace

TEST_CASE("refusal rewriting") {
  const AlignRecord unknown = make({"a", "b", "c"});
  CHECK(unknown.refusal_flag);
  CHECK(unknown.target_answer == "Sorry, I don't know.");
  CHECK(unknown.reference_answer == "Zedville");
  CHECK_FALSE(unknown.known());

  const AlignRecord weak = make({"zedville", "b", "c"});
  CHECK_FALSE(weak.refusal_flag);
  CHECK(weak.target_answer == "Zedville");

  const AlignRecord sure = make(std::vector<std::string>(10, "Zedville"));
  CHECK(sure.confidence == 1.0);
  CHECK(sure.target_answer == "Zedville");
}

TEST_CASE("custom refusal string and id mismatch") {
  const QASample q = question();
  ResponseSet rs{q.id, {"x"}, {false}};
  const auto us = summarize(rs, NormalizingOracle());
  CHECK(assemble(q, rs, us, RefusalPolicy{"No idea."}).target_answer == "No idea.");
  ResponseSet other{"q2", {"x"}, {false}};
  CHECK_THROWS_AS(assemble(q, other, us), AssemblyError);
}

TEST_CASE("records round-trip bit-exactly") {
  testing::Gen gen(12);
  const auto records = random_records(gen, 200);
  const std::string text = serialize_dataset(records);
  const auto back = parse_dataset(text);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i] == records[i]);
    CHECK(std::bit_cast<std::uint64_t>(back[i].entropy) == std::bit_cast<std::uint64_t>(records[i].entropy));
  }
  CHECK(serialize_dataset(back) == text);
  CHECK(parse_dataset("").empty());
  CHECK(serialize_dataset({}).empty());
}

TEST_CASE("entropy 1.0889... survives the file") {
  const AlignRecord r = make({"Zedville", "zedville", "ZEDVILLE", "zedville.", "a", "a", "a", "b", "b", "b"});
  CHECK(std::abs(r.entropy - 1.088900) < 1e-6);
  const std::string path = testing::scratch_dir("dataset_file") + "/d.jsonl";
  write_dataset({r, r}, path);
  const auto back = read_dataset(path);
  REQUIRE(back.size() == 2);
  CHECK(std::bit_cast<std::uint64_t>(back[1].entropy) == std::bit_cast<std::uint64_t>(r.entropy));
}

TEST_CASE("malformed lines report their line number") {
  const AlignRecord r = make({"a"});
  const std::string good = record_to_line(r);
  try {
    parse_dataset(good + "\n" + good + "\n{broken\n");
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(e.line() == 3);
  }
  try {
    parse_dataset(good + "\n{\"question_id\":\"x\"}\n");
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("invariant violations name the field") {
  auto field_of = [](const std::string& line) {
    try {
      record_from_line(line, 1);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string();
  };
  const std::string base = record_to_line(make({"Zedville", "b"}));
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string s = base;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  CHECK(field_of(replace("\"confidence\":0.5", "\"confidence\":0.6")) == "confidence");
  CHECK(field_of(replace("[true,false]", "[false,false]")) == "refusal_flag");
  CHECK(field_of(replace("[true,false]", "[true]")) == "labels");
  CHECK(field_of(replace("\"target_answer\":\"Zedville\"", "\"target_answer\":\"Other\"")) == "target_answer");
  CHECK(field_of(replace("\"entropy\":0.69314718055994529", "\"entropy\":9")) == "entropy");
}

TEST_CASE("verify_records catches tampered labels and entropy") {
  std::vector<AlignRecord> records = {make({"Zedville", "b", "b"})};
  CHECK_NOTHROW(verify_records(records, NormalizingOracle()));
  auto tampered = records;
  tampered[0].answers[2] = "c";  // entropy no longer matches
  CHECK_THROWS_AS(verify_records(tampered, NormalizingOracle()), ValidationError);
  tampered = records;
  tampered[0].answers[1] = "zedville";  // labels no longer match
  CHECK_THROWS_AS(verify_records(tampered, NormalizingOracle()), ValidationError);
}

TEST_CASE("split is deterministic and roughly proportional") {
  testing::Gen gen(2);
  const auto records = random_records(gen, 1000);
  const Split a = split_dataset(records, 17, 0.2);
  const Split b = split_dataset(records, 17, 0.2);
  CHECK(a.train.size() + a.eval.size() == 1000);
  CHECK(a.eval.size() == b.eval.size());
  for (std::size_t i = 0; i < a.eval.size(); ++i) CHECK(a.eval[i].question_id == b.eval[i].question_id);
  CHECK(a.eval.size() > 150);
  CHECK(a.eval.size() < 250);
  // Membership depends only on (seed, id), not on the rest of the list.
  for (const auto& r : a.eval) CHECK(in_eval_split(17, r.question_id, 0.2));
  CHECK(split_dataset(records, 17, 0.0).eval.empty());
  const Split c = split_dataset(records, 18, 0.2);
  bool differs = c.eval.size() != a.eval.size();
  for (std::size_t i = 0; !differs && i < a.eval.size(); ++i) differs = c.eval[i].question_id != a.eval[i].question_id;
  CHECK(differs);
}
