#include "gostat/workspace.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "gostat/csv.hpp"
#include "gostat/hash.hpp"
#include "gostat/report.hpp"

#ifndef GOSTAT_VERSION
#define GOSTAT_VERSION "0.0.0"
#endif

namespace gostat::workspace {

using json = nlohmann::ordered_json;

std::string tool_version() { return GOSTAT_VERSION; }

// ---- config

Config Config::parse(std::string_view text) {
  Config c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config.txt line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("config.txt line " + std::to_string(lineno) + ": empty key");
    c.values[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const fs::path& root) {
  fs::path p = root / "config.txt";
  if (!fs::exists(p)) return {};
  return parse(read_file(p));
}

std::optional<std::string> Config::get(std::string_view command, std::string_view key) const {
  if (auto it = values.find(std::string(command) + "." + std::string(key)); it != values.end()) return it->second;
  if (auto it = values.find(std::string(key)); it != values.end()) return it->second;
  return std::nullopt;
}

// ---- manifest and hashing

namespace {

const std::vector<std::string> kStageDirs = {"catalog", "analysis", "features", "ratings",
                                             "models",  "evaluation", "reports"};

std::string file_sha(const fs::path& p) { return sha256_hex(read_file(p)); }

std::vector<std::string> list_files(const fs::path& root, const std::string& rel_dir) {
  std::vector<std::string> out;
  fs::path dir = root / rel_dir;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

class Hasher {
 public:
  void add(std::string_view key, std::string_view value) {
    acc_.append(key);
    acc_.push_back('\0');
    acc_.append(value);
    acc_.push_back('\n');
  }
  void add(std::string_view key, double v) { add(key, format_shortest(v)); }
  void add_file(const fs::path& root, const std::string& rel) { add(rel, file_sha(root / rel)); }
  void add_dir(const fs::path& root, const std::string& rel) {
    for (const auto& f : list_files(root, rel)) add_file(root, f);
  }
  std::string done() const { return sha256_hex(acc_); }

 private:
  std::string acc_;
};

json read_manifest(const fs::path& root) {
  fs::path p = root / "manifest.json";
  if (!fs::exists(p)) {
    json m;
    m["tool"] = "gostat";
    m["version"] = tool_version();
    m["stages"] = json::object();
    return m;
  }
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw DataError("manifest.json is not valid JSON: " + std::string(e.what()));
  }
}

void write_manifest(const fs::path& root, json m) {
  m["tool"] = "gostat";
  m["version"] = tool_version();
  m["fingerprint"] = fingerprint(root);
  write_file(root / "manifest.json", m.dump(2) + "\n");
}

// One manifest entry: the hash of everything the stage read plus the
// hashes of what it wrote.
class Stage {
 public:
  Stage(fs::path root, std::string name, std::string inputs)
      : root_(std::move(root)), name_(std::move(name)), inputs_(std::move(inputs)), manifest_(read_manifest(root_)) {}

  bool up_to_date() const {
    const auto& stages = manifest_["stages"];
    if (!stages.contains(name_)) return false;
    const auto& s = stages[name_];
    if (!s.contains("outputs") || s.value("inputs", "") != inputs_) return false;
    for (const auto& [rel, sha] : s["outputs"].items())
      if (!fs::exists(root_ / rel) || file_sha(root_ / rel) != sha.get<std::string>()) return false;
    return true;
  }

  // Inputs recorded by an earlier, possibly unfinished, run.
  std::optional<std::string> previous_inputs() const {
    const auto& stages = manifest_["stages"];
    if (!stages.contains(name_)) return std::nullopt;
    return stages[name_].value("inputs", "");
  }

  void mark_started() {
    manifest_["stages"][name_] = json{{"inputs", inputs_}};
    write_manifest(root_, manifest_);
  }

  json& manifest() { return manifest_; }

  void commit(const std::vector<std::string>& outputs) {
    json out = json::object();
    for (const auto& rel : outputs) out[rel] = file_sha(root_ / rel);
    manifest_["stages"][name_] = json{{"inputs", inputs_}, {"outputs", std::move(out)}};
    write_manifest(root_, manifest_);
  }

 private:
  fs::path root_;
  std::string name_;
  std::string inputs_;
  json manifest_;
};

void reset_dir(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
}

void require(const fs::path& p, const std::string& hint) {
  if (!fs::exists(p)) throw MissingDependency(p, hint);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string split_key(const predict::SplitSpec& s) {
  return s.train_end.iso() + "|" + s.test_start.iso() + "|" + s.test_end.iso();
}

void hash_policy(Hasher& h, const engine::AnalysisPolicy& p) {
  h.add("initial_visits", std::to_string(p.initial_visits));
  h.add("escalated_visits", std::to_string(p.escalated_visits));
  h.add("winrate_jump", p.winrate_jump);
  h.add("score_jump", p.score_jump);
}

void hash_train_params(Hasher& h, const predict::TrainParams& p) {
  h.add("lr", p.logistic.learning_rate);
  h.add("l2", p.logistic.l2);
  h.add("epochs", std::to_string(p.logistic.epochs));
  h.add("n_trees", std::to_string(p.gbdt.n_trees));
  h.add("depth", std::to_string(p.gbdt.depth));
  h.add("shrinkage", p.gbdt.shrinkage);
  h.add("min_leaf", std::to_string(p.gbdt.min_leaf));
  h.add("lambda", p.gbdt.lambda);
  h.add("max_bins", std::to_string(p.gbdt.max_bins));
}

fs::path corpus_dir_of(const fs::path& root) {
  json m = read_manifest(root);
  if (m.contains("corpus")) return fs::path(m["corpus"].get<std::string>());
  return root / "corpus";
}

std::vector<const catalog::CatalogedGame*> kept_games(const std::vector<catalog::CatalogedGame>& games) {
  std::vector<const catalog::CatalogedGame*> out;
  for (const auto& g : games)
    if (g.kept()) out.push_back(&g);
  return out;
}

bool analysis_complete(const engine::AnalyzedGame& a, const sgf::GameRecord& r) {
  return a.evals.size() == r.moves.size() + 1;
}

std::string category_name(catalog::RegionPair p) { return catalog::to_string(p); }

}  // namespace

std::string fingerprint(const fs::path& root) {
  Hasher h;
  json m = fs::exists(root / "manifest.json") ? read_manifest(root) : json::object();
  h.add("corpus", m.value("corpus_fingerprint", ""));
  for (const auto& d : kStageDirs) h.add_dir(root, d);
  return h.done();
}

std::vector<std::string> verify_manifest(const fs::path& root) {
  std::vector<std::string> bad;
  json m = read_manifest(root);
  for (const auto& [stage, entry] : m["stages"].items()) {
    if (!entry.contains("outputs")) {
      bad.push_back(stage + " (unfinished)");
      continue;
    }
    for (const auto& [rel, sha] : entry["outputs"].items())
      if (!fs::exists(root / rel) || file_sha(root / rel) != sha.get<std::string>()) bad.push_back(rel);
  }
  if (m.value("fingerprint", "") != fingerprint(root)) bad.push_back("manifest.json fingerprint");
  return bad;
}

// ---- synth

StageResult synth(const fs::path& root, const synth::SyntheticSpec& spec) {
  StageResult res;
  auto corpus = synth::generate_synthetic(spec);
  res.log = corpus.warnings;
  synth::write_corpus(corpus, root / "corpus");
  res.log.push_back("synth: " + std::to_string(corpus.games.size()) + " games, " +
                    std::to_string(corpus.players.size()) + " players in " + (root / "corpus").string());
  return res;
}

// ---- ingest

StageResult ingest(const fs::path& root, const IngestOptions& options) {
  fs::path corpus = options.corpus.empty() ? root / "corpus" : options.corpus;
  if (!fs::is_directory(corpus)) throw MissingDependency(corpus, "corpus directory");
  fs::path players_path = options.players.value_or(corpus / "players.csv");
  fs::path tournaments_path = options.tournaments.value_or(corpus / "tournaments.csv");
  require(players_path, "player table");
  require(tournaments_path, "tournament table");
  std::optional<fs::path> blocklist_path = options.blocklist;
  if (blocklist_path) require(*blocklist_path, "event blocklist");
  else if (fs::exists(corpus / "blocklist.txt")) blocklist_path = corpus / "blocklist.txt";

  catalog::CleaningRules rules = options.rules;
  if (blocklist_path)
    for (auto& p : catalog::parse_blocklist(read_file(*blocklist_path))) rules.event_blocklist.push_back(p);

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(corpus))
    if (e.is_regular_file() && lower(e.path().extension().string()) == ".sgf") files.push_back(e.path());
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    return fs::relative(a, corpus).generic_string() < fs::relative(b, corpus).generic_string();
  });

  Hasher corpus_hash;
  for (const auto& f : files) corpus_hash.add(fs::relative(f, corpus).generic_string(), file_sha(f));
  corpus_hash.add("players", file_sha(players_path));
  corpus_hash.add("tournaments", file_sha(tournaments_path));
  Hasher inputs;
  inputs.add("corpus", corpus_hash.done());
  inputs.add("rules", rules.serialize());

  StageResult res;
  Stage stage(root, "ingest", inputs.done());
  if (stage.up_to_date()) {
    res.up_to_date = true;
    return res;
  }

  std::vector<sgf::GameRecord> records;
  std::vector<std::string> log;
  for (const auto& f : files) {
    try {
      records.push_back(sgf::load_sgf_file(f));
    } catch (const std::exception& e) {
      log.push_back("skipped unreadable " + fs::relative(f, corpus).generic_string() + ": " + e.what());
    }
  }
  auto players = catalog::PlayerTable::from_csv(read_csv(players_path));
  auto tournaments = catalog::TournamentTable::from_csv(read_csv(tournaments_path));
  auto games = catalog::ingest(records, players, tournaments, rules, &log);

  fs::path dir = root / "catalog";
  reset_dir(dir);
  fs::create_directories(dir / "sgf");
  write_csv(dir / "games.csv", catalog::games_to_csv(games));
  write_csv(dir / "players.csv", players.to_csv());
  write_csv(dir / "tournaments.csv", tournaments.to_csv());
  write_file(dir / "rules.txt", rules.serialize());
  std::string log_text;
  for (const auto& l : log) log_text += l + "\n";
  write_file(dir / "log.txt", log_text);
  // Canonical copies in input order; later stages re-run the cleaning from these.
  int width = std::max<int>(6, static_cast<int>(std::to_string(records.size()).size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::string n = std::to_string(i + 1);
    n.insert(0, static_cast<std::size_t>(width) - n.size(), '0');
    write_file(dir / "sgf" / (n + ".sgf"), sgf::serialize_sgf(records[i]) + "\n");
  }

  std::vector<catalog::CatalogedGame> kept;
  for (const auto& g : games)
    if (g.kept()) kept.push_back(g);
  auto summary = catalog::summarize_regions(kept);
  CsvTable regions;
  regions.header = {"bucket", "games"};
  regions.rows = {{"Total", std::to_string(summary.total)}, {"CR", std::to_string(summary.cr)},
                  {"CHN", std::to_string(summary.chn)},     {"KOR", std::to_string(summary.kor)},
                  {"JPN", std::to_string(summary.jpn)},     {"Others", std::to_string(summary.others)}};
  write_csv(dir / "regions.csv", regions);

  stage.manifest()["corpus"] = fs::absolute(corpus).lexically_normal().string();
  stage.manifest()["corpus_fingerprint"] = corpus_hash.done();
  stage.commit(list_files(root, "catalog"));

  res.log = log;
  res.log.push_back("ingest: " + std::to_string(records.size()) + " records, " + std::to_string(kept.size()) +
                    " kept");
  return res;
}

std::vector<catalog::CatalogedGame> load_catalog(const fs::path& root) {
  fs::path dir = root / "catalog";
  for (const char* f : {"games.csv", "players.csv", "tournaments.csv", "rules.txt"})
    require(dir / f, "run ingest first");
  require(dir / "sgf", "run ingest first");
  std::vector<sgf::GameRecord> records;
  for (const auto& rel : list_files(root, "catalog/sgf")) records.push_back(sgf::load_sgf_file(root / rel));
  auto players = catalog::PlayerTable::from_csv(read_csv(dir / "players.csv"));
  auto tournaments = catalog::TournamentTable::from_csv(read_csv(dir / "tournaments.csv"));
  auto rules = catalog::CleaningRules::parse(read_file(dir / "rules.txt"));
  return catalog::ingest(records, players, tournaments, rules);
}

std::map<std::string, engine::AnalyzedGame> load_analyses(const fs::path& root,
                                                          const std::vector<catalog::CatalogedGame>& games) {
  std::map<std::string, engine::AnalyzedGame> out;
  for (const auto& g : games) {
    if (!g.kept()) continue;
    fs::path p = root / "analysis" / (g.game.game_id + ".jsonl");
    if (!fs::exists(p)) continue;
    auto a = engine::parse_jsonl(read_file(p));
    if (a.game_id != g.game.game_id) throw DataError(p.string() + ": header names game " + a.game_id);
    out.emplace(g.game.game_id, std::move(a));
  }
  return out;
}

// ---- analyze

StageResult analyze(const fs::path& root, const AnalyzeOptions& options) {
  if (options.engine.empty()) throw UsageError("no engine given: pass --engine or set GOSTAT_ENGINE");
  if (options.workers < 1) throw UsageError("--workers must be >= 1");
  options.policy.validate();
  auto games = load_catalog(root);
  auto kept = kept_games(games);

  bool mock = options.engine.rfind("mock:", 0) == 0;
  std::optional<fs::path> scripts_dir = options.scripts;
  if (scripts_dir) require(*scripts_dir, "engine script directory");
  else if (fs::path d = corpus_dir_of(root) / "engine_script"; mock && fs::is_directory(d)) scripts_dir = d;

  Hasher inputs;
  inputs.add("engine", options.engine);
  inputs.add("rules_label", options.rules_label);
  hash_policy(inputs, options.policy);
  inputs.add_dir(root, "catalog");
  std::map<std::string, engine::MockEngine::Script> scripts;
  if (mock && scripts_dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(*scripts_dir))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::string text = read_file(f);
      inputs.add("script:" + f.filename().string(), sha256_hex(text));
      try {
        scripts.emplace(f.stem().string(), engine::parse_script(text));
      } catch (const std::exception& e) {
        throw DataError(f.string() + ": " + e.what());
      }
    }
  }

  StageResult res;
  Stage stage(root, "analyze", inputs.done());
  if (stage.up_to_date()) {
    res.up_to_date = true;
    return res;
  }
  fs::path dir = root / "analysis";
  // Files from a run with other inputs are stale; an unfinished run with the
  // same inputs is resumed.
  if (stage.previous_inputs() != inputs.done()) reset_dir(dir);
  fs::create_directories(dir);
  stage.mark_started();

  std::set<std::string> wanted;
  for (const auto* g : kept) wanted.insert(g->game.game_id + ".jsonl");
  for (const auto& rel : list_files(root, "analysis"))
    if (!wanted.contains(fs::path(rel).filename().string())) fs::remove(root / rel);

  std::atomic<std::size_t> next{0};
  std::atomic<int> resumed{0}, skipped{0}, fresh{0};
  std::mutex err_mu;
  std::vector<std::string> errors;
  auto work = [&]() {
    std::unique_ptr<engine::Engine> eng;
    for (std::size_t i = next++; i < kept.size(); i = next++) {
      const auto& rec = kept[i]->game;
      fs::path p = dir / (rec.game_id + ".jsonl");
      try {
        std::optional<engine::AnalyzedGame> prior;
        if (fs::exists(p)) {
          try {
            prior = engine::parse_jsonl(read_file(p));
            if (prior->game_id != rec.game_id || !(prior->policy == options.policy) ||
                prior->rules_label != options.rules_label || prior->komi != rec.komi ||
                prior->evals.size() > rec.moves.size() + 1)
              prior.reset();
          } catch (const std::exception&) {
            prior.reset();
          }
        }
        if (prior && analysis_complete(*prior, rec)) {
          ++skipped;
          continue;
        }
        if (!eng) eng = engine::make_engine(options.engine, scripts, options.timeout);
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (prior) {
          out << engine::to_jsonl(*prior);
          ++resumed;
        } else {
          engine::AnalyzedGame header;
          header.game_id = rec.game_id;
          header.komi = rec.komi;
          header.rules_label = options.rules_label;
          header.policy = options.policy;
          out << engine::header_line(header) << "\n";
          ++fresh;
        }
        out.flush();
        engine::evaluate_game(rec, *eng, options.policy, options.rules_label, prior ? &*prior : nullptr,
                              [&](const engine::MoveEval& e) {
                                out << engine::eval_line(e) << "\n";
                                out.flush();
                              });
        if (!out) throw DataError("write failed: " + p.string());
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mu);
        errors.push_back(rec.game_id + ": " + e.what());
        eng.reset();  // a broken engine process is not reused
      }
    }
  };
  int n_threads = std::min<int>(options.workers, std::max<int>(1, static_cast<int>(kept.size())));
  std::vector<std::thread> threads;
  for (int t = 1; t < n_threads; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (!errors.empty()) {
    std::sort(errors.begin(), errors.end());
    throw engine::EngineError("analysis stopped with " + std::to_string(errors.size()) +
                              " failed game(s); rerun to resume. First: " + errors.front());
  }

  CsvTable esc;
  esc.header = {"game_id", "ordinal", "initial_winrate_black", "initial_score_black", "winrate_black", "score_black",
                "visits_used"};
  for (const auto* g : kept) {
    auto a = engine::parse_jsonl(read_file(dir / (g->game.game_id + ".jsonl")));
    for (const auto& e : a.evals)
      if (e.escalated())
        esc.rows.push_back({a.game_id, std::to_string(e.ordinal), format_shortest(*e.initial_winrate_black),
                            format_shortest(*e.initial_score_black), format_shortest(e.winrate_black),
                            format_shortest(e.score_black), std::to_string(e.visits_used)});
  }
  write_csv(dir / "escalations.csv", esc);
  stage.commit(list_files(root, "analysis"));
  res.log.push_back("analyze: " + std::to_string(kept.size()) + " kept games; " + std::to_string(fresh) + " new, " +
                    std::to_string(resumed) + " resumed, " + std::to_string(skipped) + " already complete; " +
                    std::to_string(esc.rows.size()) + " escalations logged in analysis/escalations.csv");
  return res;
}

// ---- features

StageResult build_features(const fs::path& root, const FeaturesOptions& options) {
  options.split.validate();
  if (options.workers < 1) throw UsageError("--workers must be >= 1");
  features::FeatureConfig config = options.config;
  if (!config.freeze_at) config.freeze_at = options.split.test_start;

  auto games = load_catalog(root);
  Hasher inputs;
  inputs.add_dir(root, "catalog");
  inputs.add_dir(root, "analysis");
  inputs.add("freeze_at", config.freeze_at->iso());
  inputs.add("gm", format_shortest(config.gm.window) + "/" + format_shortest(config.gm.winrate_bar) + "/" +
                       format_shortest(config.gm.score_bar));
  inputs.add("ur", format_shortest(config.ur.loss_winrate_bar) + "/" + format_shortest(config.ur.loss_score_bar) +
                       "/" + format_shortest(config.ur.similarity_winrate) + "/" +
                       format_shortest(config.ur.similarity_score));
  inputs.add("stats", std::to_string(config.stats.recommend_k) + "/" + std::to_string(config.stats.opening_len) + "/" +
                          format_shortest(config.stats.ar_winrate) + "/" + format_shortest(config.stats.ar_score) +
                          "/" + format_shortest(config.stats.sar_winrate) + "/" +
                          format_shortest(config.stats.sar_score));
  inputs.add("windows", std::to_string(config.windows.short_window) + "/" + std::to_string(config.windows.long_window) +
                            "/" + std::to_string(config.ingame_recent));
  inputs.add("whr", format_shortest(config.whr.prior_variance_per_year) + "/" +
                        format_shortest(config.whr.prior_center) + "/" + format_shortest(config.whr.prior_sd_initial));

  StageResult res;
  Stage stage(root, "features", inputs.done());
  if (stage.up_to_date()) {
    res.up_to_date = true;
    return res;
  }
  auto analyses = load_analyses(root, games);
  if (analyses.empty()) res.log.push_back("features: no analysis found; in-game columns stay missing");
  auto rows = features::build_features(games, analyses, config, options.workers);
  fs::path dir = root / "features";
  reset_dir(dir);
  write_csv(dir / "features.csv", features::features_to_csv(rows));
  write_csv(dir / "schema.csv", features::schema_to_csv());
  stage.commit(list_files(root, "features"));
  res.log.push_back("features: " + std::to_string(rows.size()) + " rows, " +
                    std::to_string(features::column_names().size()) + " columns, " +
                    std::to_string(analyses.size()) + " analyzed games");
  return res;
}

std::vector<features::FeatureVector> load_features(const fs::path& root) {
  fs::path p = root / "features" / "features.csv";
  require(p, "run features first");
  try {
    return features::features_from_csv(read_csv(p));
  } catch (const std::invalid_argument& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

// ---- rate

StageResult rate(const fs::path& root, const RateOptions& options) {
  options.split.validate();
  if (options.systems.empty()) throw UsageError("no rating system selected");
  auto games = load_catalog(root);
  std::vector<const catalog::CatalogedGame*> ordered = kept_games(games);
  std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return std::tie(a->date(), a->game.game_id) < std::tie(b->date(), b->game.game_id);
  });
  std::vector<rating::RatedGame> train;
  std::vector<const catalog::CatalogedGame*> test;
  for (const auto* g : ordered) {
    auto s = g->black_score();
    if (!s) continue;
    if (g->date() <= options.split.train_end) train.push_back({g->black.player_id, g->white.player_id, g->date(), *s});
    else if (g->date() >= options.split.test_start && g->date() <= options.split.test_end && *s != 0.5)
      test.push_back(g);
  }

  StageResult res;
  bool all_current = true;
  for (auto sys : options.systems) {
    std::string name = rating::to_string(sys);
    Hasher inputs;
    inputs.add_dir(root, "catalog");
    inputs.add("split", split_key(options.split));
    switch (sys) {
      case rating::System::Elo:
        inputs.add("k", options.elo.k);
        inputs.add("initial", options.elo.initial);
        break;
      case rating::System::TrueSkill:
        inputs.add("ts", format_shortest(options.trueskill.mu) + "/" + format_shortest(options.trueskill.sigma) + "/" +
                             format_shortest(options.trueskill.beta) + "/" + format_shortest(options.trueskill.tau) +
                             "/" + format_shortest(options.trueskill.draw_prob));
        break;
      case rating::System::Whr:
        inputs.add("whr", format_shortest(options.whr.prior_variance_per_year) + "/" +
                              format_shortest(options.whr.prior_center) + "/" +
                              format_shortest(options.whr.prior_sd_initial) + "/" +
                              std::to_string(options.whr.max_newton_iters) + "/" +
                              format_shortest(options.whr.convergence_tol));
        break;
    }
    Stage stage(root, "rate:" + name, inputs.done());
    if (stage.up_to_date()) continue;
    all_current = false;

    rating::RatingHistory h;
    switch (sys) {
      case rating::System::Elo: h = rating::elo_fit(train, options.elo); break;
      case rating::System::TrueSkill: h = rating::trueskill_fit(train, options.trueskill); break;
      case rating::System::Whr: h = rating::whr_fit(train, options.whr); break;
    }
    if (!h.converged) res.log.push_back("rate: " + name + " did not converge (max residual " +
                                        format_shortest(h.max_residual) + ")");
    CsvTable preds;
    preds.header = {"game_id", "date", "label", "category", "p_black"};
    for (const auto* g : test) {
      double p = rating::rating_predict(h, g->black.player_id, g->white.player_id, g->date());
      preds.rows.push_back({g->game.game_id, g->date().iso(), *g->black_score() == 1.0 ? "1" : "0",
                            category_name(g->region_pair), format_shortest(p)});
    }
    fs::path dir = root / "ratings";
    fs::create_directories(dir);
    std::vector<std::string> outs = {"ratings/" + name + ".csv", "ratings/" + name + "_params.json",
                                     "ratings/" + name + "_predictions.csv"};
    write_csv(root / outs[0], rating::ratings_to_csv(h));
    write_file(root / outs[1], rating::params_to_json(h));
    write_csv(root / outs[2], preds);
    stage.commit(outs);
    res.log.push_back("rate: " + name + " fitted on " + std::to_string(train.size()) + " games, " +
                      std::to_string(test.size()) + " test predictions");
  }
  res.up_to_date = all_current;
  return res;
}

// ---- train

std::string model_name(predict::ModelKind kind, const predict::AblationMask& mask) {
  std::string base = predict::to_string(kind);
  return mask == predict::AblationMask{} ? base : base + "_" + mask.label();
}

StageResult train(const fs::path& root, const TrainOptions& options) {
  options.split.validate();
  options.mask.validate();
  require(root / "features" / "features.csv", "run features first");
  std::string name = model_name(options.kind, options.mask);
  Hasher inputs;
  inputs.add_file(root, "features/features.csv");
  inputs.add("split", split_key(options.split));
  inputs.add("mask", options.mask.label());
  hash_train_params(inputs, options.params);
  StageResult res;
  Stage stage(root, "train:" + name, inputs.done());
  if (stage.up_to_date()) {
    res.up_to_date = true;
    return res;
  }
  auto rows = load_features(root);
  auto split = predict::chronological_split(rows, options.split);
  if (split.train.empty()) throw DataError("no training rows on or before " + options.split.train_end.iso());
  auto data = predict::to_dataset(split.train, predict::masked_columns(options.mask));
  std::vector<std::string> warnings;
  auto model = predict::fit(options.kind, data, options.params, &warnings);
  fs::create_directories(root / "models");
  std::string rel = "models/" + name + ".json";
  write_file(root / rel, model->to_json());
  stage.commit({rel});
  res.log = warnings;
  res.log.push_back("train: " + name + " on " + std::to_string(data.rows()) + " rows x " +
                    std::to_string(data.cols()) + " columns");
  return res;
}

// ---- evaluate

StageResult evaluate(const fs::path& root, const EvaluateOptions& options) {
  options.split.validate();
  require(root / "features" / "features.csv", "run features first");
  auto model_files = list_files(root, "models");
  std::vector<std::string> rating_files;
  for (const auto& f : list_files(root, "ratings"))
    if (f.ends_with("_predictions.csv")) rating_files.push_back(f);
  std::erase_if(model_files, [](const std::string& f) { return !f.ends_with(".json"); });
  if (model_files.empty() && rating_files.empty()) throw MissingDependency(root / "models", "run train or rate first");

  Hasher inputs;
  inputs.add_file(root, "features/features.csv");
  for (const auto& f : model_files) inputs.add_file(root, f);
  for (const auto& f : rating_files) inputs.add_file(root, f);
  inputs.add("split", split_key(options.split));
  inputs.add("ablation", options.ablation ? predict::to_string(options.ablation_model) : "off");
  hash_train_params(inputs, options.params);
  StageResult res;
  Stage stage(root, "evaluate", inputs.done());
  if (stage.up_to_date()) {
    res.up_to_date = true;
    return res;
  }

  auto rows = load_features(root);
  auto split = predict::chronological_split(rows, options.split);
  if (split.test.empty()) throw DataError("no test rows between " + options.split.test_start.iso() + " and " +
                                          options.split.test_end.iso());
  fs::path dir = root / "evaluation";
  reset_dir(dir);
  std::vector<std::pair<std::string, predict::Metrics>> metrics;
  for (const auto& f : model_files) {
    std::string name = fs::path(f).stem().string();
    std::unique_ptr<predict::Model> model;
    try {
      model = predict::model_from_json(read_file(root / f));
    } catch (const std::exception& e) {
      throw DataError(f + ": " + e.what());
    }
    auto p = predict::predict_all(*model, split.test);
    write_csv(dir / ("predictions_" + name + ".csv"), predict::predictions_to_csv(split.test, p));
    metrics.emplace_back(name, predict::evaluate(*model, split.test));
  }
  for (const auto& f : rating_files) {
    std::string name = fs::path(f).filename().string();
    name = name.substr(0, name.size() - std::string("_predictions.csv").size());
    CsvTable t = read_csv(root / f);
    auto ip = t.require_column("p_black"), il = t.require_column("label"), ic = t.require_column("category");
    std::vector<double> p;
    std::vector<int> labels;
    std::vector<catalog::RegionPair> cats;
    for (const auto& r : t.rows) {
      p.push_back(std::stod(r[ip]));
      labels.push_back(std::stoi(r[il]));
      auto c = catalog::parse_region_pair(r[ic]);
      if (!c) throw DataError(f + ": bad category " + r[ic]);
      cats.push_back(*c);
    }
    if (p.empty()) {
      res.log.push_back("evaluate: " + name + " has no test predictions");
      continue;
    }
    metrics.emplace_back(name, predict::evaluate(p, labels, cats));
  }
  write_csv(dir / "metrics.csv", predict::metrics_to_csv(metrics));
  if (options.ablation) {
    auto abl = predict::run_ablation(rows, predict::default_masks(), options.ablation_model, options.split,
                                     options.params);
    write_csv(dir / "ablation.csv", predict::ablation_to_csv(abl));
  }
  stage.commit(list_files(root, "evaluation"));
  for (const auto& [name, m] : metrics) {
    const auto& mean = m.row("Mean");
    res.log.push_back("evaluate: " + name + " ACC " + (mean.acc ? format_fixed(*mean.acc, 4) : "-") + " MSE " +
                      (mean.mse ? format_fixed(*mean.mse, 4) : "-") + " over " + std::to_string(mean.n) + " games");
  }
  return res;
}

// ---- report

StageResult report(const fs::path& root, const ReportOptions& options) {
  if (options.top_n < 1 || options.length_bin < 1 || options.whr_buckets < 1 || options.opening_len < 0)
    throw UsageError("report options must be positive");
  auto games = load_catalog(root);
  Hasher inputs;
  inputs.add_dir(root, "catalog");
  inputs.add_dir(root, "analysis");
  inputs.add("opts", std::to_string(options.top_n) + "/" + std::to_string(options.length_bin) + "/" +
                         std::to_string(options.whr_buckets) + "/" + std::to_string(options.opening_len));
  StageResult res;
  Stage stage(root, "report", inputs.done());
  if (stage.up_to_date()) {
    res.up_to_date = true;
    return res;
  }
  auto all = load_analyses(root, games);
  report::Analyses analyses;
  for (const auto& g : games)
    if (auto it = all.find(g.game.game_id); it != all.end() && analysis_complete(it->second, g.game))
      analyses.emplace(it->first, it->second);

  std::vector<std::pair<std::string, report::ReportTable>> tables;
  tables.emplace_back("komi", report::black_winrate_by_komi(games, analyses.empty() ? nullptr : &analyses));
  for (auto d : {report::Dimension::Year, report::Dimension::TournamentKind, report::Dimension::TournamentCategory,
                 report::Dimension::Round, report::Dimension::Gender, report::Dimension::RegionPair,
                 report::Dimension::Player, report::Dimension::Matchup}) {
    bool capped = d == report::Dimension::Player || d == report::Dimension::Matchup;
    tables.emplace_back(std::string("counts_") + report::to_string(d),
                        report::counts_by(games, d, capped ? std::optional<std::size_t>(options.top_n) : std::nullopt));
  }
  tables.emplace_back("lengths", report::length_distribution(games, options.length_bin, true));
  tables.emplace_back("length_summary", report::length_summary(games));
  tables.emplace_back("ages", report::age_by_generation(games));
  if (!analyses.empty()) {
    for (auto ph : {report::Phase::Opening, report::Phase::NonOpening, report::Phase::All})
      tables.emplace_back(std::string("coincidence_") + report::to_string(ph),
                          report::coincidence_by_year(games, analyses, ph, options.opening_len));
    std::vector<rating::RatedGame> rated;
    std::vector<const catalog::CatalogedGame*> ordered = kept_games(games);
    std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
      return std::tie(a->date(), a->game.game_id) < std::tie(b->date(), b->game.game_id);
    });
    for (const auto* g : ordered)
      if (auto s = g->black_score()) rated.push_back({g->black.player_id, g->white.player_id, g->date(), *s});
    auto whr = rating::whr_fit(rated);
    for (auto st : {report::LossStat::Mlwr, report::LossStat::Mls})
      tables.emplace_back(std::string("loss_") + report::to_string(st),
                          report::loss_by_whr_bucket(games, analyses, whr, options.whr_buckets, st));
  } else {
    res.log.push_back("report: no complete analysis; engine-based tables skipped");
  }

  fs::path dir = root / "reports";
  reset_dir(dir);
  json index = json::array();
  for (const auto& [name, t] : tables) {
    t.validate();
    write_csv(dir / (name + ".csv"), t.to_csv());
    index.push_back(json{{"name", name}, {"file", name + ".csv"}, {"title", t.title}, {"key", t.key_name},
                         {"rows", t.rows.size()}, {"note", t.note}});
  }
  json m;
  m["kept_games"] = kept_games(games).size();
  m["analyzed_games"] = analyses.size();
  m["tables"] = std::move(index);
  write_file(dir / "manifest.json", m.dump(2) + "\n");
  stage.commit(list_files(root, "reports"));
  res.log.push_back("report: " + std::to_string(tables.size()) + " tables in " + dir.string());
  return res;
}

}  // namespace gostat::workspace
