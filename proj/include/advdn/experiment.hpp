#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "advdn/advtrain.hpp"
#include "advdn/attacks.hpp"
#include "advdn/denoiser.hpp"
#include "advdn/synth.hpp"
#include "advdn/train.hpp"

namespace advdn {

struct ModelEntry {
  std::string id;
  DenoiserSpec spec;
  TrainConfig train;  // seed is always derived from the global seed
};

struct AttackBlock {
  std::string model;
  std::map<std::string, AttackConfig> modes;  // "pgd", "l2pgd", "clean"
};

struct SweepBlock {
  std::string model;
  std::string attack = "pgd";
  int count = 100;
  double threshold = 0.5;
  std::string perturbation = "adversarial";  // or "gaussian": random direction of equal norm
};

struct CombineBlock {
  std::string model;
  std::vector<double> lambdas;
  double threshold = 0.3;
};

struct TransferBlock {
  std::vector<std::string> models;
  AttackConfig attack = AttackConfig::pgd();
  double threshold = 0.3;
};

struct AdvTrainBlock {
  std::string base;
  std::string id;
  AdvTrainConfig cfg;
  std::string cross_source;
};

struct ResistBlock {
  std::string source;
  std::string classical;
  AttackConfig attack = AttackConfig::pgd();
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string run_id;
  std::string output;
  std::string train_manifest;
  std::string test_manifest;
  double test_sigma = 25.0;
  std::optional<CorpusSpec> corpus_train;
  std::optional<CorpusSpec> corpus_test;
  std::vector<ModelEntry> models;
  std::optional<AttackBlock> attack;
  std::optional<SweepBlock> sweep;
  std::optional<CombineBlock> combine;
  std::optional<TransferBlock> transfer;
  std::optional<AdvTrainBlock> advtrain;
  std::optional<ResistBlock> resist;
  std::optional<std::string> report_title;

  /// Directory that relative paths resolve against (not serialized).
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
  std::uint64_t hash() const;
  const ModelEntry* find_model(const std::string& id) const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// The published JSON schema for experiment configs.
std::string_view experiment_schema();

struct ValidationIssue {
  int line = 0;
  std::string pointer;
  std::string message;
};

/// Parses and schema-checks config text. Returns all issues found (parse
/// errors or the first schema violation).
std::vector<ValidationIssue> validate_config_text(std::string_view text);

/// Applies a "dotted.path=value" override; value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Reads, overrides, validates and parses a config file. Throws ConfigError
/// with "file:line: pointer: message" lines on failure.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config(std::string_view text, const std::string& source_name,
                              const std::filesystem::path& base_dir);

/// Append-only file tree. Rewriting a file with identical bytes is a no-op;
/// different bytes raise ArtifactConflict. manifest.json is exempt.
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const std::string& rel) const { return root_ / rel; }
  bool exists(const std::string& rel) const;
  void write(const std::string& rel, std::string_view bytes);
  std::string read(const std::string& rel) const;

  /// Relative path -> FNV-1a hex of every file under the root except manifest.json.
  std::map<std::string, std::string> checksums() const;
  void write_manifest(const ExperimentConfig& cfg, const std::string& command) const;

 private:
  std::filesystem::path root_;
};

std::string read_text_file(const std::filesystem::path& p);
std::string code_version();

/// Output directory: explicit override, then the config's output field, then
/// $ADVDN_OUTPUT_ROOT/<run id>, then ./runs/<run id>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const std::optional<std::string>& out);

/// Runs one command ("corpus", "train", "attack", "sweep", "combine",
/// "transfer", "advtrain", "resist", "report"). `mode` selects the attack
/// variant for "attack". Progress goes to `log` when non-null.
void run_command(const std::string& command, const std::string& mode, const ExperimentConfig& cfg,
                 ArtifactStore& store, std::ostream* log = nullptr);

}  // namespace advdn
