#include "ualign/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "ualign/error.hpp"
#include "ualign/text.hpp"

namespace ualign {

namespace {

constexpr std::string_view kFormatTag = "ualign-checkpoint 1";

struct Parsed {
  std::map<std::string, std::string> header;
  std::vector<std::vector<double>> rows;

  const std::string& get(const std::string& key) const {
    auto it = header.find(key);
    if (it == header.end()) throw ValidationError(key, "missing from checkpoint header");
    return it->second;
  }
  std::uint64_t get_count(const std::string& key) const {
    try {
      return std::stoull(get(key));
    } catch (const std::exception&) {
      throw ValidationError(key, "not an integer");
    }
  }
};

void append_row(std::string& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ' ';
    out += format_real(row[i]);
  }
  out += '\n';
}

Parsed parse(std::string_view text, std::string_view expected_kind) {
  Parsed p;
  const auto lines = split(text, '\n');
  std::size_t i = 0;
  if (lines.empty() || lines[0] != kFormatTag) {
    throw LoadError(1, "not a ualign checkpoint");
  }
  ++i;
  std::size_t rows = 0;
  bool have_rows = false;
  for (; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const auto space = line.find(' ');
    const std::string key = line.substr(0, space);
    const std::string value = space == std::string::npos ? "" : line.substr(space + 1);
    if (key == "rows") {
      try {
        rows = std::stoull(value);
      } catch (const std::exception&) {
        throw LoadError(i + 1, "bad row count");
      }
      have_rows = true;
      ++i;
      break;
    }
    p.header[key] = value;
  }
  if (!have_rows) throw LoadError(i, "checkpoint has no rows line");
  if (p.get("kind") != expected_kind) {
    throw ValidationError("kind", "expected " + std::string(expected_kind) +
                                      " checkpoint, found " + p.get("kind"));
  }
  if (p.get("hash") != FeatureMap::kHashId) {
    throw ValidationError("hash", "unsupported feature hash " + p.get("hash"));
  }
  const std::size_t dims = p.get_count("dims");
  for (std::size_t r = 0; r < rows; ++r, ++i) {
    if (i >= lines.size()) throw LoadError(i + 1, "checkpoint truncated");
    std::vector<double> row;
    row.reserve(dims);
    for (const auto& item : split(lines[i], ' ')) {
      try {
        row.push_back(parse_real(item));
      } catch (const std::exception&) {
        throw LoadError(i + 1, "bad number '" + item + "'");
      }
    }
    if (row.size() != dims) throw LoadError(i + 1, "row has wrong length");
    p.rows.push_back(std::move(row));
  }
  return p;
}

std::string header(std::string_view kind, std::size_t dims, std::uint64_t seed) {
  std::string out(kFormatTag);
  out += "\nkind " + std::string(kind);
  out += "\nhash " + std::string(FeatureMap::kHashId);
  out += "\ndims " + std::to_string(dims);
  out += "\nseed " + std::to_string(seed) + "\n";
  return out;
}

}  // namespace

std::string serialize_estimator(const BinnedEstimator& est) {
  const std::size_t dims = est.features().dims();
  std::string out = header("estimator", dims, est.seed);
  out += "target " + std::string(target_name(est.target())) + "\n";
  out += "bins " + std::to_string(est.bins()) + "\n";
  out += "samples " + std::to_string(est.samples_per_question()) + "\n";
  out += "rows " + std::to_string(est.bins()) + "\n";
  for (std::size_t b = 0; b < est.bins(); ++b) {
    append_row(out, std::span<const double>(est.weights()).subspan(b * dims, dims));
  }
  return out;
}

BinnedEstimator parse_estimator(std::string_view text) {
  const Parsed p = parse(text, "estimator");
  BinnedEstimator est(parse_target(p.get("target")), FeatureMap(p.get_count("dims")),
                      static_cast<int>(p.get_count("samples")));
  if (p.get_count("bins") != est.bins() || p.rows.size() != est.bins()) {
    throw ValidationError("bins", "bin count does not match target");
  }
  est.seed = p.get_count("seed");
  const std::size_t dims = est.features().dims();
  for (std::size_t b = 0; b < est.bins(); ++b) {
    std::copy(p.rows[b].begin(), p.rows[b].end(), est.weights().begin() + b * dims);
  }
  return est;
}

std::string serialize_reward(const RewardModel& model) {
  std::string out = header("reward", model.features().dims(), model.seed);
  out += "use_confidence " + std::string(model.options().use_confidence ? "1" : "0") + "\n";
  out += "use_entropy " + std::string(model.options().use_entropy ? "1" : "0") + "\n";
  out += "refusal " + model.options().refusal_string + "\n";
  out += "bias " + format_real(model.bias) + "\n";
  out += "rows 1\n";
  append_row(out, model.weights());
  return out;
}

RewardModel parse_reward(std::string_view text) {
  const Parsed p = parse(text, "reward");
  RewardOptions options;
  options.use_confidence = p.get("use_confidence") == "1";
  options.use_entropy = p.get("use_entropy") == "1";
  options.refusal_string = p.get("refusal");
  RewardModel model(FeatureMap(p.get_count("dims")), options);
  if (p.rows.size() != 1) throw ValidationError("rows", "reward checkpoint needs one row");
  model.weights() = p.rows[0];
  model.bias = parse_real(p.get("bias"));
  model.seed = p.get_count("seed");
  return model;
}

std::string serialize_policy(const PolicyState& policy, std::uint64_t seed) {
  std::string out = header("policy", policy.features().dims(), seed);
  out += "refusal " + policy.refusal().refusal_string + "\n";
  out += "questions " + std::to_string(policy.size()) + "\n";
  out += "rows 2\n";
  append_row(out, policy.weights);
  append_row(out, policy.reference_weights);
  return out;
}

void load_policy_weights(std::string_view text, PolicyState& policy) {
  const Parsed p = parse(text, "policy");
  if (p.get_count("dims") != policy.features().dims()) {
    throw ValidationError("dims", "policy checkpoint dimension mismatch");
  }
  if (p.get_count("questions") != policy.size()) {
    throw ValidationError("questions", "policy checkpoint was trained on a different dataset");
  }
  if (p.rows.size() != 2) throw ValidationError("rows", "policy checkpoint needs two rows");
  policy.weights = p.rows[0];
  policy.reference_weights = p.rows[1];
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace ualign
