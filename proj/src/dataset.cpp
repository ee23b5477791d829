#include "ualign/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ualign/error.hpp"
#include "ualign/text.hpp"

namespace ualign {

namespace {

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

void validate_record(const AlignRecord& r, const RefusalPolicy& policy) {
  if (r.question_id.empty()) throw ValidationError("question_id", "empty");
  if (r.question.empty()) throw ValidationError("question", "empty");
  if (r.answers.empty()) throw ValidationError("answers", "empty answer list");
  if (r.labels.size() != r.answers.size()) {
    throw ValidationError("labels", "length differs from answers");
  }
  if (r.reference_answer.empty()) throw ValidationError("reference_answer", "empty");
  const bool unknown = classify_known(r.labels) == KnownStatus::Unknown;
  if (r.refusal_flag != unknown) {
    throw ValidationError("refusal_flag", "must be true iff every label is false");
  }
  if (r.refusal_flag && r.target_answer != policy.refusal_string) {
    throw ValidationError("target_answer", "refused record must carry the refusal string");
  }
  if (!r.refusal_flag && r.target_answer != r.reference_answer) {
    throw ValidationError("target_answer", "known record must carry the reference answer");
  }
  if (r.confidence != confidence(r.labels)) {
    throw ValidationError("confidence", "does not equal the fraction of true labels");
  }
  const double max_entropy = std::log(static_cast<double>(r.answers.size()));
  if (!std::isfinite(r.entropy) || r.entropy < 0.0 ||
      r.entropy > max_entropy + 1e-12) {
    throw ValidationError("entropy", "outside [0, ln K]");
  }
}

}  // namespace

AlignRecord assemble(const QASample& question, const ResponseSet& responses,
                     const UncertaintySummary& summary,
                     const RefusalPolicy& policy) {
  if (question.id != responses.question_id) {
    throw AssemblyError("response set belongs to '" + responses.question_id +
                        "', not '" + question.id + "'");
  }
  if (policy.refusal_string.empty()) {
    throw AssemblyError("refusal string must not be empty");
  }
  AlignRecord r;
  r.question_id = question.id;
  r.question = question.question;
  r.answers = responses.answers;
  r.labels = responses.labels;
  r.reference_answer = question.reference_answer;
  r.refusal_flag = classify_known(responses) == KnownStatus::Unknown;
  r.target_answer = r.refusal_flag ? policy.refusal_string : question.reference_answer;
  r.confidence = summary.confidence;
  r.entropy = summary.entropy;
  return r;
}

std::vector<AlignRecord> build_dataset(const Generator& generator,
                                       const std::vector<QASample>& questions,
                                       const SamplingConfig& sampling,
                                       const EquivalenceOracle& oracle,
                                       const RefusalPolicy& policy) {
  std::vector<AlignRecord> records;
  records.reserve(questions.size());
  for (const auto& q : questions) {
    ResponseSet rs = sample_responses(generator, q, sampling);
    UncertaintySummary us = summarize(rs, oracle);
    records.push_back(assemble(q, rs, us, policy));
  }
  return records;
}

std::string record_to_line(const AlignRecord& r) {
  std::string line = "{\"question_id\":" + quoted(r.question_id) +
                     ",\"question\":" + quoted(r.question) + ",\"answers\":[";
  for (std::size_t i = 0; i < r.answers.size(); ++i) {
    if (i) line += ',';
    line += quoted(r.answers[i]);
  }
  line += "],\"labels\":[";
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    if (i) line += ',';
    line += r.labels[i] ? "true" : "false";
  }
  line += "],\"reference_answer\":" + quoted(r.reference_answer) +
          ",\"target_answer\":" + quoted(r.target_answer) +
          ",\"confidence\":" + format_real(r.confidence) +
          ",\"entropy\":" + format_real(r.entropy) +
          ",\"refusal_flag\":" + (r.refusal_flag ? "true" : "false") + "}";
  return line;
}

AlignRecord record_from_line(std::string_view line, std::size_t line_number,
                             const RefusalPolicy& policy) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(line_number, e.what());
  }
  AlignRecord r;
  try {
    r.question_id = j.at("question_id").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.answers = j.at("answers").get<std::vector<std::string>>();
    for (const auto& z : j.at("labels")) r.labels.push_back(z.get<bool>());
    r.reference_answer = j.at("reference_answer").get<std::string>();
    r.target_answer = j.at("target_answer").get<std::string>();
    r.confidence = j.at("confidence").get<double>();
    r.entropy = j.at("entropy").get<double>();
    r.refusal_flag = j.at("refusal_flag").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(line_number, e.what());
  }
  validate_record(r, policy);
  return r;
}

std::string serialize_dataset(const std::vector<AlignRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_line(r);
    out += '\n';
  }
  return out;
}

void write_dataset(const std::vector<AlignRecord>& records,
                   const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << serialize_dataset(records);
  if (!out) throw Error("write to '" + path + "' failed");
}

std::vector<AlignRecord> parse_dataset(std::string_view text,
                                       const RefusalPolicy& policy) {
  std::vector<AlignRecord> records;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_number;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty()) records.push_back(record_from_line(line, line_number, policy));
    start = end + 1;
  }
  return records;
}

std::vector<AlignRecord> read_dataset(const std::string& path,
                                      const RefusalPolicy& policy) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), policy);
}

void verify_records(const std::vector<AlignRecord>& records,
                    const EquivalenceOracle& oracle,
                    const RefusalPolicy& policy) {
  for (const auto& r : records) {
    validate_record(r, policy);
    if (label_answers(r.answers, r.reference_answer) != r.labels) {
      throw ValidationError("labels", "record " + r.question_id +
                                          ": labels disagree with PREM matching");
    }
    const double e = semantic_entropy(cluster_semantic(r.answers, oracle));
    if (std::abs(e - r.entropy) > 1e-12) {
      throw ValidationError("entropy", "record " + r.question_id +
                                           ": stored entropy does not match recomputation");
    }
  }
}

bool in_eval_split(std::uint64_t seed, std::string_view question_id,
                   double eval_fraction) {
  const std::uint64_t h = mix_seed(derive_seed(seed, "split"), fnv1a64(question_id));
  const double position = static_cast<double>(h >> 11) * 0x1.0p-53;
  return position < eval_fraction;
}

Split split_dataset(const std::vector<AlignRecord>& records, std::uint64_t seed,
                    double eval_fraction) {
  Split s;
  for (const auto& r : records) {
    (in_eval_split(seed, r.question_id, eval_fraction) ? s.eval : s.train).push_back(r);
  }
  return s;
}

}  // namespace ualign
