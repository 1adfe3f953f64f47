#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gostat/catalog.hpp"
#include "gostat/engine.hpp"
#include "gostat/features.hpp"
#include "gostat/predict.hpp"
#include "gostat/rating.hpp"
#include "gostat/synth.hpp"

// On-disk pipeline. Every stage owns one directory under the workspace root
// and records input and output hashes in <root>/manifest.json:
//
//   corpus/      SGF files, players.csv, tournaments.csv, blocklist.txt, engine_script/
//   catalog/     games.csv, players.csv, tournaments.csv, rules.txt, regions.csv, log.txt, sgf/
//   analysis/    <game_id>.jsonl per kept game, escalations.csv
//   features/    features.csv, schema.csv
//   ratings/     <system>.csv, <system>_params.json, <system>_predictions.csv
//   models/      <model>[_<mask>].json
//   evaluation/  metrics.csv, predictions_<name>.csv, ablation.csv
//   reports/     *.csv, manifest.json
namespace gostat::workspace {

namespace fs = std::filesystem;

std::string tool_version();

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MissingDependency : public std::runtime_error {
 public:
  explicit MissingDependency(const fs::path& path, const std::string& hint = "")
      : std::runtime_error("missing dependency: " + path.string() + (hint.empty() ? "" : " (" + hint + ")")),
        path_(path) {}
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key=value file; '#' starts a comment line. Keys may be scoped as
// "<command>.<key>", which wins over the bare key for that command.
struct Config {
  std::map<std::string, std::string> values;

  static Config parse(std::string_view text);  // UsageError on malformed lines
  static Config load(const fs::path& root);    // <root>/config.txt, empty when absent
  std::optional<std::string> get(std::string_view command, std::string_view key) const;
};

struct StageResult {
  bool up_to_date = false;  // nothing was written
  std::vector<std::string> log;
};

StageResult synth(const fs::path& root, const synth::SyntheticSpec& spec);

struct IngestOptions {
  fs::path corpus;                    // default <root>/corpus
  std::optional<fs::path> players;    // default <corpus>/players.csv
  std::optional<fs::path> tournaments;
  std::optional<fs::path> blocklist;  // default <corpus>/blocklist.txt when present
  catalog::CleaningRules rules;       // event_blocklist is extended by the blocklist file
};
StageResult ingest(const fs::path& root, const IngestOptions& options);

struct AnalyzeOptions {
  std::string engine;  // "mock:seed=N" or "cmd:<command>"
  int workers = 1;
  engine::AnalysisPolicy policy;
  std::string rules_label = "japanese";
  std::optional<fs::path> scripts;  // default <corpus>/engine_script when present
  std::chrono::milliseconds timeout = std::chrono::seconds(60);
};
// Partial analysis files are resumed; complete ones are left alone.
StageResult analyze(const fs::path& root, const AnalyzeOptions& options);

struct FeaturesOptions {
  features::FeatureConfig config;  // freeze_at defaults to split.test_start
  predict::SplitSpec split;
  int workers = 1;
};
StageResult build_features(const fs::path& root, const FeaturesOptions& options);

struct RateOptions {
  std::vector<rating::System> systems = {rating::System::Whr};
  predict::SplitSpec split;
  rating::EloParams elo;
  rating::TrueSkillParams trueskill;
  rating::WhrParams whr;
};
// Fits on games up to split.train_end and predicts every decided test game.
StageResult rate(const fs::path& root, const RateOptions& options);

struct TrainOptions {
  predict::ModelKind kind = predict::ModelKind::Gbdt;
  predict::AblationMask mask;
  predict::SplitSpec split;
  predict::TrainParams params;
};
std::string model_name(predict::ModelKind kind, const predict::AblationMask& mask);
StageResult train(const fs::path& root, const TrainOptions& options);

struct EvaluateOptions {
  predict::SplitSpec split;
  bool ablation = true;
  predict::ModelKind ablation_model = predict::ModelKind::Gbdt;
  predict::TrainParams params;
};
StageResult evaluate(const fs::path& root, const EvaluateOptions& options);

struct ReportOptions {
  int top_n = 20;
  int length_bin = 10;
  int whr_buckets = 5;
  int opening_len = 50;
};
StageResult report(const fs::path& root, const ReportOptions& options);

// ---- reading stage outputs

std::vector<catalog::CatalogedGame> load_catalog(const fs::path& root);
// Every analysis file for a kept game, complete or not.
std::map<std::string, engine::AnalyzedGame> load_analyses(const fs::path& root,
                                                          const std::vector<catalog::CatalogedGame>& games);
std::vector<features::FeatureVector> load_features(const fs::path& root);

// SHA-256 over the relative paths and contents of every stage directory.
std::string fingerprint(const fs::path& root);
// Files whose current hash differs from the one recorded in the manifest.
std::vector<std::string> verify_manifest(const fs::path& root);

}  // namespace gostat::workspace
