#include "ualign/pipeline.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ualign/checkpoint.hpp"
#include "ualign/error.hpp"
#include "ualign/report.hpp"
#include "ualign/text.hpp"

namespace ualign {

namespace fs = std::filesystem;

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::BuildWorld: return "build-world";
    case Stage::BuildDataset: return "build-dataset";
    case Stage::TrainEstimators: return "train-estimators";
    case Stage::TrainReward: return "train-reward";
    case Stage::Align: return "align";
    case Stage::Evaluate: return "evaluate";
  }
  return "?";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::BuildWorld,      Stage::BuildDataset,
                                            Stage::TrainEstimators, Stage::TrainReward,
                                            Stage::Align,           Stage::Evaluate};
  return stages;
}

Stage parse_stage(std::string_view name) {
  for (Stage s : all_stages()) {
    if (stage_name(s) == name) return s;
  }
  throw ConfigError("stage", "unknown stage '" + std::string(name) + "'");
}

std::string content_digest(std::string_view content) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "fnv1a64:%016" PRIx64, fnv1a64(content));
  return buffer;
}

std::string manifest_line(const ManifestEntry& entry) {
  nlohmann::ordered_json j;
  j["stage"] = entry.stage;
  j["seed"] = entry.seed;
  j["version"] = entry.version;
  j["config"] = entry.config_digest;
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : entry.inputs) j["inputs"][k] = v;
  j["outputs"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : entry.outputs) j["outputs"][k] = v;
  return j.dump();
}

ManifestEntry manifest_entry_from_line(std::string_view line, std::size_t line_number) {
  try {
    const auto j = nlohmann::json::parse(line);
    ManifestEntry e;
    e.stage = j.at("stage").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.version = j.at("version").get<std::string>();
    e.config_digest = j.at("config").get<std::string>();
    e.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    e.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw LoadError(line_number, std::string("bad manifest line: ") + ex.what());
  }
}

Manifest Manifest::load(const std::string& out_dir) {
  Manifest m;
  const fs::path path = fs::path(out_dir) / files::kManifest;
  if (!fs::exists(path)) return m;
  std::size_t n = 0;
  for (const auto& line : split(read_text_file(path.string()), '\n')) {
    ++n;
    if (trim(line).empty()) continue;
    m.put(manifest_entry_from_line(line, n));
  }
  return m;
}

void Manifest::save(const std::string& out_dir) const {
  std::string text;
  for (const auto& e : entries_) text += manifest_line(e) + "\n";
  write_text_file((fs::path(out_dir) / files::kManifest).string(), text);
}

const ManifestEntry* Manifest::find(std::string_view stage) const {
  for (const auto& e : entries_) {
    if (e.stage == stage) return &e;
  }
  return nullptr;
}

void Manifest::put(ManifestEntry entry) {
  auto rank = [](const std::string& name) {
    for (std::size_t i = 0; i < all_stages().size(); ++i) {
      if (stage_name(all_stages()[i]) == name) return i;
    }
    return all_stages().size();
  };
  std::erase_if(entries_, [&](const ManifestEntry& e) { return e.stage == entry.stage; });
  auto pos = entries_.begin();
  while (pos != entries_.end() && rank(pos->stage) < rank(entry.stage)) ++pos;
  entries_.insert(pos, std::move(entry));
}

namespace {

void say(std::ostream* log, Stage stage, const std::string& message) {
  if (log) *log << "[" << stage_name(stage) << "] " << message << "\n";
}

std::string percent(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", 100.0 * v);
  return buffer;
}

// Per-stage I/O: reads go through read() so the input digests land in the
// manifest, writes through write().
class StageRun {
 public:
  StageRun(Stage stage, const RunConfig& config, std::ostream* log)
      : stage_(stage), config_(config), log_(log) {
    fs::create_directories(config.out_dir);
    manifest_ = Manifest::load(config.out_dir);
    entry_.stage = std::string(stage_name(stage));
    entry_.seed = config.stage_seed(stage_name(stage));
    entry_.version = std::string(kVersion);
    RunConfig digest_view = config;
    digest_view.out_dir.clear();
    entry_.config_digest = content_digest(digest_view.print_config());
  }

  std::string path(std::string_view name) const {
    return (fs::path(config_.out_dir) / name).string();
  }

  // Throws PrerequisiteError unless `before` ran and its outputs are intact.
  void require(Stage before) const {
    const std::string name(stage_name(before));
    const std::string hint = "`" + std::string(stage_name(stage_)) + "` needs the outputs of `" +
                             name + "`; run `ualign " + name + "` first";
    const ManifestEntry* e = manifest_.find(name);
    if (!e) throw PrerequisiteError(name, hint);
    for (const auto& [file, digest] : e->outputs) {
      const std::string p = path(file);
      if (!fs::exists(p)) throw PrerequisiteError(name, hint + " (" + file + " is missing)");
      if (content_digest(read_text_file(p)) != digest) {
        throw PrerequisiteError(name, hint + " (" + file + " changed since it was written)");
      }
    }
  }

  bool has(Stage before) const { return manifest_.find(stage_name(before)) != nullptr; }

  std::string read(std::string_view name) {
    std::string text = read_text_file(path(name));
    entry_.inputs[std::string(name)] = content_digest(text);
    return text;
  }

  std::string read_external(const std::string& file) {
    std::string text = read_text_file(file);
    entry_.inputs[fs::path(file).filename().string()] = content_digest(text);
    return text;
  }

  void write(std::string_view name, const std::string& content) {
    write_text_file(path(name), content);
    entry_.outputs[std::string(name)] = content_digest(content);
  }

  void note(const std::string& message) const { say(log_, stage_, message); }

  void finish() {
    manifest_.put(entry_);
    manifest_.save(config_.out_dir);
  }

  std::uint64_t seed() const { return entry_.seed; }

 private:
  Stage stage_;
  const RunConfig& config_;
  std::ostream* log_;
  Manifest manifest_;
  ManifestEntry entry_;
};

std::string serialize_questions(const std::vector<QASample>& questions) {
  std::string out;
  for (const auto& q : questions) out += question_to_line(q) + "\n";
  return out;
}

std::vector<QASample> parse_questions(std::string_view text) {
  std::vector<QASample> out;
  std::size_t n = 0;
  for (const auto& line : split(text, '\n')) {
    ++n;
    if (trim(line).empty()) continue;
    out.push_back(question_from_line(line, n));
  }
  return out;
}

NormalizingOracle make_oracle(const RunConfig& config) {
  if (config.synonyms_path.empty()) return NormalizingOracle();
  return NormalizingOracle(read_synonym_table(config.synonyms_path));
}

RefusalPolicy refusal_of(const RunConfig& config) { return RefusalPolicy{config.refusal}; }

std::vector<AlignRecord> load_dataset(StageRun& run, const RunConfig& config) {
  return parse_dataset(run.read(files::kDataset), refusal_of(config));
}

// Records the models learn from: the training side of the split.
std::vector<AlignRecord> training_records(const std::vector<AlignRecord>& records,
                                          const RunConfig& config) {
  if (config.eval_fraction == 0.0) return records;
  return split_dataset(records, config.stage_seed("split"), config.eval_fraction).train;
}

void build_world_stage(const RunConfig& config, std::ostream* log) {
  StageRun run(Stage::BuildWorld, config, log);
  if (!config.external_dataset.empty()) {
    throw ConfigError("dataset.external",
                      "build-world does nothing for an external dataset; run build-dataset");
  }
  const World world = build_world(config.effective_world());
  run.write(files::kWorld, serialize_questions(world.questions));
  run.note(std::to_string(world.questions.size()) + " questions");
  run.finish();
}

void build_dataset_stage(const RunConfig& config, std::ostream* log) {
  StageRun run(Stage::BuildDataset, config, log);
  const NormalizingOracle oracle = make_oracle(config);
  const RefusalPolicy refusal = refusal_of(config);
  std::vector<AlignRecord> records;
  if (!config.external_dataset.empty()) {
    records = parse_dataset(run.read_external(config.external_dataset), refusal);
    verify_records(records, oracle, refusal);
  } else {
    run.require(Stage::BuildWorld);
    const std::string text = run.read(files::kWorld);
    const World world = build_world(config.effective_world());
    if (serialize_questions(world.questions) != text) {
      throw PrerequisiteError("build-world",
                              "world.jsonl does not match the world config; run `ualign "
                              "build-world` again");
    }
    records = build_dataset(world.generator, parse_questions(text),
                            config.effective_sampling(), oracle, refusal);
  }
  std::size_t known = 0;
  for (const auto& r : records) known += r.known() ? 1 : 0;
  run.write(files::kDataset, serialize_dataset(records));
  run.note(std::to_string(records.size()) + " records, " + std::to_string(known) + " known");
  run.finish();
}

void train_estimators_stage(const RunConfig& config, std::ostream* log) {
  StageRun run(Stage::TrainEstimators, config, log);
  run.require(Stage::BuildDataset);
  const auto records = training_records(load_dataset(run, config), config);
  TrainConfig tc = config.estimator;
  tc.seed = run.seed();
  for (auto target : {UncertaintyTarget::Confidence, UncertaintyTarget::Entropy}) {
    TrainReport report;
    const BinnedEstimator est =
        train_estimator(records, target, tc, FeatureMap(config.dims), &report);
    run.write(target == UncertaintyTarget::Confidence ? files::kConfidenceModel
                                                      : files::kEntropyModel,
              serialize_estimator(est));
    run.note(std::string(target_name(target)) + " estimator loss " +
             format_real(report.epoch_losses.front()) + " -> " + format_real(report.final_loss));
  }
  run.finish();
}

void train_reward_stage(const RunConfig& config, std::ostream* log) {
  StageRun run(Stage::TrainReward, config, log);
  run.require(Stage::BuildDataset);
  const auto records = training_records(load_dataset(run, config), config);
  TrainConfig tc = config.reward;
  tc.seed = run.seed();
  RewardOptions options{config.reward_use_confidence, config.reward_use_entropy, config.refusal};
  TrainReport report;
  const RewardModel model = train_reward(records, tc, options, FeatureMap(config.dims), &report);
  run.write(files::kReward, serialize_reward(model));
  run.note("reward loss " + format_real(report.final_loss) + ", held-in accuracy " +
           percent(report.accuracy) + "%");
  run.finish();
}

std::string stats_line(const StepStats& s) {
  return "{\"step\":" + std::to_string(s.step) + ",\"epoch\":" + std::to_string(s.epoch) +
         ",\"mean_r\":" + format_real(s.mean_r) + ",\"mean_r1\":" + format_real(s.mean_r1) +
         ",\"mean_r2\":" + format_real(s.mean_r2) + ",\"mean_kl\":" + format_real(s.mean_kl) +
         "}";
}

void align_stage(const RunConfig& config, std::ostream* log) {
  StageRun run(Stage::Align, config, log);
  run.require(Stage::BuildDataset);
  run.require(Stage::TrainEstimators);
  run.require(Stage::TrainReward);
  const auto records = load_dataset(run, config);
  const std::string c_text = run.read(files::kConfidenceModel);
  const std::string e_text = run.read(files::kEntropyModel);
  const std::string r_text = run.read(files::kReward);
  const BinnedEstimator c_model = parse_estimator(c_text);
  const BinnedEstimator e_model = parse_estimator(e_text);
  const RewardModel reward = parse_reward(r_text);

  PolicyInitConfig pic = config.policy_init;
  pic.seed = run.seed();
  PolicyState initial = init_policy(records, pic, FeatureMap(config.dims), refusal_of(config));

  std::vector<std::size_t> train;
  if (config.eval_fraction > 0.0) {
    for (const auto& r : training_records(records, config)) {
      train.push_back(initial.index_of(r.question_id));
    }
  }
  PpoConfig ppo = config.ppo;
  ppo.seed = run.seed();
  const AlignResult result = align(std::move(initial), reward, c_model, e_model, ppo, train);

  // The reward model and estimators are read-only during alignment.
  if (serialize_estimator(c_model) != c_text || serialize_estimator(e_model) != e_text ||
      serialize_reward(reward) != r_text) {
    throw Error("a frozen model changed during alignment");
  }

  std::string stats;
  double worst = 0.0;
  for (const auto& s : result.curve) {
    if (!std::isfinite(s.mean_kl)) {
      throw DivergenceError("mean KL became non-finite at step " + std::to_string(s.step) +
                            "; lower ppo.learning_rate or raise ppo.beta");
    }
    worst = std::max(worst, s.mean_kl);
    stats += stats_line(s) + "\n";
  }
  run.write(files::kPolicy, serialize_policy(result.policy, run.seed()));
  run.write(files::kAlignStats, stats);
  run.note(std::to_string(result.curve.size()) + " PPO steps, max mean KL " + format_real(worst));
  if (worst >= config.kl_ceiling) {
    run.note("warning: mean KL reached " + format_real(worst) + ", above the ceiling " +
             format_real(config.kl_ceiling));
  }
  run.finish();
}

std::string curve_tsv(const std::string& stats_text, const char* field) {
  std::string out = std::string("step\t") + field + "\n";
  for (const auto& line : split(stats_text, '\n')) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    out += std::to_string(j.at("step").get<std::size_t>()) + "\t" +
           format_real(j.at(field).get<double>()) + "\n";
  }
  return out;
}

void evaluate_stage(const RunConfig& config, std::ostream* log) {
  StageRun run(Stage::Evaluate, config, log);
  run.require(Stage::BuildDataset);
  run.require(Stage::TrainEstimators);
  run.require(Stage::Align);
  const auto records = load_dataset(run, config);
  const BinnedEstimator c_model = parse_estimator(run.read(files::kConfidenceModel));
  const BinnedEstimator e_model = parse_estimator(run.read(files::kEntropyModel));
  PolicyState policy(records, FeatureMap(config.dims), refusal_of(config),
                     config.policy_init.smoothing);
  load_policy_weights(run.read(files::kPolicy), policy);

  const std::vector<AlignRecord> eval_records =
      config.eval_fraction == 0.0
          ? records
          : split_dataset(records, config.stage_seed("split"), config.eval_fraction).eval;
  const std::vector<EvaluationReport> reports = {
      evaluate_policy(policy, eval_records, c_model, e_model, PolicyView::Reference, "initial"),
      evaluate_policy(policy, eval_records, c_model, e_model, PolicyView::Current, "aligned"),
  };
  std::string lines;
  for (const auto& r : reports) lines += report_to_line(r) + "\n";
  std::string table = report_table(reports);

  const bool synthetic = config.external_dataset.empty() && run.has(Stage::BuildWorld);
  if (synthetic) {
    run.require(Stage::BuildWorld);
    const auto questions = parse_questions(run.read(files::kWorld));
    const CohortResult cohort = plurality_cohort(policy, eval_records, questions, c_model, e_model);
    lines += "{\"label\":\"weak_plurality_cohort\",\"questions\":" +
             std::to_string(cohort.questions) +
             ",\"initial_correct\":" + std::to_string(cohort.initial_correct) +
             ",\"aligned_correct\":" + std::to_string(cohort.aligned_correct) + "}\n";
    table += "weakly known, plurality correct: " + std::to_string(cohort.questions) +
             " questions, correct argmax " + std::to_string(cohort.initial_correct) + " -> " +
             std::to_string(cohort.aligned_correct) + "\n";

    std::vector<QASample> train_questions;
    const auto train = training_records(records, config);
    std::unordered_map<std::string, const QASample*> by_id;
    for (const auto& q : questions) by_id.emplace(q.id, &q);
    for (const auto& r : train) {
      if (auto it = by_id.find(r.question_id); it != by_id.end()) {
        train_questions.push_back(*it->second);
      }
    }
    const World world = build_world(config.effective_world());
    SamplingConfig fresh = config.sampling;
    fresh.seed = derive_seed(run.seed(), "fresh-samples");
    const double a = sample_confidence_auroc(world.generator, train_questions, c_model, fresh);
    lines += "{\"label\":\"confidence_estimator\",\"samples\":" +
             std::to_string(train_questions.size() * static_cast<std::size_t>(fresh.k)) +
             ",\"auroc\":" + format_real(a) + "}\n";
    table += "confidence estimator AUROC on fresh samples: " + percent(a) + "\n";
  }

  run.write(files::kReport, lines);
  run.write(files::kReportTable, table);
  const std::string stats = run.read(files::kAlignStats);
  run.write(files::kCurveReward, curve_tsv(stats, "mean_r1"));
  run.write(files::kCurveKl, curve_tsv(stats, "mean_kl"));
  std::istringstream rows(table);
  for (std::string row; std::getline(rows, row);) run.note(row);
  run.finish();
}

}  // namespace

void run_stage(Stage stage, const RunConfig& config, std::ostream* log) {
  config.validate();
  switch (stage) {
    case Stage::BuildWorld: return build_world_stage(config, log);
    case Stage::BuildDataset: return build_dataset_stage(config, log);
    case Stage::TrainEstimators: return train_estimators_stage(config, log);
    case Stage::TrainReward: return train_reward_stage(config, log);
    case Stage::Align: return align_stage(config, log);
    case Stage::Evaluate: return evaluate_stage(config, log);
  }
}

void run_all(const RunConfig& config, std::ostream* log) {
  for (Stage s : all_stages()) {
    if (s == Stage::BuildWorld && !config.external_dataset.empty()) continue;
    run_stage(s, config, log);
  }
}

}  // namespace ualign
