#ifndef UALIGN_PIPELINE_HPP_
#define UALIGN_PIPELINE_HPP_

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ualign/config.hpp"

namespace ualign {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Stage { BuildWorld, BuildDataset, TrainEstimators, TrainReward, Align, Evaluate };

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);
const std::vector<Stage>& all_stages();

// Output file names inside the run directory.
namespace files {
inline constexpr std::string_view kWorld = "world.jsonl";
inline constexpr std::string_view kDataset = "dataset.jsonl";
inline constexpr std::string_view kConfidenceModel = "estimator_confidence.ckpt";
inline constexpr std::string_view kEntropyModel = "estimator_entropy.ckpt";
inline constexpr std::string_view kReward = "reward.ckpt";
inline constexpr std::string_view kPolicy = "policy.ckpt";
inline constexpr std::string_view kAlignStats = "align_stats.jsonl";
inline constexpr std::string_view kReport = "report.jsonl";
inline constexpr std::string_view kReportTable = "report.txt";
inline constexpr std::string_view kCurveReward = "curve_mean_r1.tsv";
inline constexpr std::string_view kCurveKl = "curve_mean_kl.tsv";
inline constexpr std::string_view kManifest = "manifest.jsonl";
}  // namespace files

// "fnv1a64:" followed by 16 hex digits of the content hash.
std::string content_digest(std::string_view content);

struct ManifestEntry {
  std::string stage;
  std::uint64_t seed = 0;
  std::string version;
  std::string config_digest;
  std::map<std::string, std::string> inputs;   // file name -> digest
  std::map<std::string, std::string> outputs;  // file name -> digest

  bool operator==(const ManifestEntry&) const = default;
};

std::string manifest_line(const ManifestEntry& entry);
ManifestEntry manifest_entry_from_line(std::string_view line, std::size_t line_number);

// Manifest of one run directory; at most one entry per stage, kept in
// pipeline order on disk.
class Manifest {
 public:
  static Manifest load(const std::string& out_dir);
  void save(const std::string& out_dir) const;

  const ManifestEntry* find(std::string_view stage) const;
  void put(ManifestEntry entry);
  const std::vector<ManifestEntry>& entries() const { return entries_; }

 private:
  std::vector<ManifestEntry> entries_;
};

// Runs one stage: checks prerequisites against the manifest, reads the
// earlier stages' files, writes this stage's files and its manifest line.
// Progress goes to `log` when non-null.
void run_stage(Stage stage, const RunConfig& config, std::ostream* log = nullptr);

// Every stage in order; build-world is skipped for external datasets.
void run_all(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace ualign

#endif  // UALIGN_PIPELINE_HPP_
