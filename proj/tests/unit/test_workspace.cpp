#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "doctest.h"
#include "gostat/csv.hpp"
#include "gostat/workspace.hpp"

using namespace gostat;
namespace ws = gostat::workspace;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("gostat_ws_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  return out;
}

synth::SyntheticSpec small_spec() {
  synth::SyntheticSpec s;
  s.n_players = 12;
  s.n_games = 120;
  s.start = Date(2014, 1, 1);
  s.min_moves = 60;
  s.max_moves = 120;
  return s;
}

void run_all(const fs::path& root, int workers, const synth::SyntheticSpec& spec = small_spec()) {
  ws::synth(root, spec);
  ws::ingest(root, {});
  ws::AnalyzeOptions an;
  an.engine = "mock:seed=7";
  an.workers = workers;
  ws::analyze(root, an);
  ws::FeaturesOptions fo;
  fo.workers = workers;
  ws::build_features(root, fo);
  ws::RateOptions ro;
  ro.systems = {rating::System::Elo, rating::System::TrueSkill, rating::System::Whr};
  ws::rate(root, ro);
  ws::train(root, {});
  ws::EvaluateOptions eo;
  ws::evaluate(root, eo);
  ws::report(root, {});
}

int run_cli(const std::string& args, std::string* err = nullptr) {
  fs::path log = fs::temp_directory_path() / "gostat_ws_cli_stderr.txt";
  std::string cmd = std::string(GOSTAT_CLI) + " " + args + " >/dev/null 2>" + log.string();
  int status = std::system(cmd.c_str());
  if (err) *err = read_file(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config: key=value with scoped keys and comments") {
  auto c = ws::Config::parse("# comment\nworkers = 3\nanalyze.workers=5\n\nengine=mock:seed=1\n");
  CHECK(c.get("features", "workers") == "3");
  CHECK(c.get("analyze", "workers") == "5");
  CHECK(c.get("analyze", "engine") == "mock:seed=1");
  CHECK_FALSE(c.get("analyze", "missing"));
  CHECK_THROWS_AS(ws::Config::parse("no equals sign"), ws::UsageError);
  CHECK_THROWS_AS(ws::Config::parse("=value"), ws::UsageError);
  auto root = scratch("config");
  CHECK(ws::Config::load(root).values.empty());
}

TEST_CASE("stages refuse to run without their inputs") {
  auto root = scratch("missing");
  try {
    ws::build_features(root, {});
    FAIL("expected MissingDependency");
  } catch (const ws::MissingDependency& e) {
    CHECK(e.path().filename() == "games.csv");
  }
  CHECK_THROWS_AS(ws::ingest(root, {}), ws::MissingDependency);
  CHECK_THROWS_AS(ws::train(root, {}), ws::MissingDependency);
  CHECK_THROWS_AS(ws::evaluate(root, {}), ws::MissingDependency);
  ws::synth(root, small_spec());
  fs::remove(root / "corpus" / "tournaments.csv");
  CHECK_THROWS_AS(ws::ingest(root, {}), ws::MissingDependency);
}

TEST_CASE("analyze needs an engine") {
  auto root = scratch("noengine");
  ws::synth(root, small_spec());
  ws::ingest(root, {});
  CHECK_THROWS_AS(ws::analyze(root, {}), ws::UsageError);
}

TEST_CASE("pipeline: workers do not change the workspace; reruns are no-ops") {
  auto a = scratch("det_a"), b = scratch("det_b");
  run_all(a, 1);
  run_all(b, 3);
  CHECK(ws::fingerprint(a) == ws::fingerprint(b));
  CHECK(ws::verify_manifest(a).empty());
  for (const char* d : {"catalog", "analysis", "features", "ratings", "models", "evaluation", "reports"})
    CHECK(read_tree(a / d) == read_tree(b / d));

  auto manifest = read_file(a / "manifest.json");
  ws::AnalyzeOptions an;
  an.engine = "mock:seed=7";
  CHECK(ws::ingest(a, {}).up_to_date);
  CHECK(ws::analyze(a, an).up_to_date);
  CHECK(ws::build_features(a, {}).up_to_date);
  CHECK(ws::rate(a, {}).up_to_date);
  CHECK(ws::train(a, {}).up_to_date);
  CHECK(ws::evaluate(a, {}).up_to_date);
  CHECK(ws::report(a, {}).up_to_date);
  CHECK(read_file(a / "manifest.json") == manifest);

  // a different engine seed is a different input
  an.engine = "mock:seed=8";
  CHECK_FALSE(ws::analyze(a, an).up_to_date);
}

TEST_CASE("pipeline: tampering is detected and repaired by rerunning the stage") {
  auto root = scratch("tamper");
  run_all(root, 2);
  std::string fp = ws::fingerprint(root);
  auto original = read_file(root / "features" / "features.csv");
  write_file(root / "features" / "features.csv", original + "junk\n");
  auto bad = ws::verify_manifest(root);
  CHECK(std::find(bad.begin(), bad.end(), "features/features.csv") != bad.end());
  CHECK_FALSE(ws::build_features(root, {}).up_to_date);
  CHECK(read_file(root / "features" / "features.csv") == original);
  CHECK(ws::fingerprint(root) == fp);
}

TEST_CASE("pipeline: deleting reports and rerunning changes nothing upstream") {
  auto root = scratch("isolation");
  run_all(root, 1);
  std::map<std::string, std::map<std::string, std::string>> before;
  for (const char* d : {"corpus", "catalog", "analysis", "features", "ratings", "models", "evaluation", "reports"})
    before[d] = read_tree(root / d);
  std::string fp = ws::fingerprint(root);
  fs::remove_all(root / "reports");
  CHECK_FALSE(ws::report(root, {}).up_to_date);
  for (const auto& [d, files] : before) CHECK(read_tree(root / d) == files);
  CHECK(ws::fingerprint(root) == fp);
  auto index = read_file(root / "reports" / "manifest.json");
  CHECK(index.find("counts_region_pair") != std::string::npos);
  CHECK(index.find("coincidence_all") != std::string::npos);
}

TEST_CASE("analyze resumes a torn file and reproduces it") {
  auto root = scratch("resume");
  ws::synth(root, small_spec());
  ws::ingest(root, {});
  ws::AnalyzeOptions an;
  an.engine = "mock:seed=7";
  ws::analyze(root, an);
  auto before = read_tree(root / "analysis");
  fs::path victim;
  for (const auto& e : fs::directory_iterator(root / "analysis"))
    if (e.path().extension() == ".jsonl") {
      victim = e.path();
      break;
    }
  std::string text = read_file(victim);
  write_file(victim, text.substr(0, text.size() / 2));  // cut mid-line
  auto res = ws::analyze(root, an);
  CHECK_FALSE(res.up_to_date);
  REQUIRE_FALSE(res.log.empty());
  CHECK(res.log.back().find("1 resumed") != std::string::npos);
  CHECK(read_tree(root / "analysis") == before);
}

TEST_CASE("escalations are logged for injected jumps") {
  auto root = scratch("escalate");
  auto spec = small_spec();
  spec.mistake_rate = 1.0;
  ws::synth(root, spec);
  ws::ingest(root, {});
  ws::AnalyzeOptions an;
  an.engine = "mock:seed=7";
  ws::analyze(root, an);
  auto esc = read_csv(root / "analysis" / "escalations.csv");
  auto truth = read_csv(root / "corpus" / "truth.csv");
  std::set<std::pair<std::string, std::string>> logged;
  for (const auto& r : esc.rows) logged.emplace(r[0], r[1]);
  for (const auto& r : truth.rows) {
    // the first move of each injected pair jumps by more than 0.10
    CHECK(logged.contains({r[0], r[8]}));
  }
}

TEST_CASE("ingest, features, rate, train, evaluate without analysis") {
  auto root = scratch("noanalysis");
  ws::synth(root, synth::SyntheticSpec{});
  ws::ingest(root, {});
  auto f = ws::build_features(root, {});
  CHECK(f.log.front().find("no analysis") != std::string::npos);
  ws::rate(root, {});
  ws::train(root, {});
  ws::evaluate(root, {});
  auto metrics = read_csv(root / "evaluation" / "metrics.csv");
  auto acc = metrics.require_column("Mean_ACC");
  REQUIRE(metrics.rows.size() == 2);  // gbdt, whr
  for (const auto& r : metrics.rows) {
    INFO(r[0]);
    CHECK(std::stod(r[acc]) >= 0.60);
  }
}

TEST_CASE("cli: exit codes, help, config precedence") {
  auto root = scratch("cli");
  std::string err;
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("train --help") == 0);
  CHECK(run_cli("synth --no-such-flag") == 2);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("-w " + root.string() + " features", &err) == 3);
  CHECK(err.find("catalog") != std::string::npos);
  CHECK(run_cli("-w " + (root / "nowhere").string() + " report", &err) == 3);

  write_file(root / "config.txt", "synth.games=5\nplayers=4\n");
  CHECK(run_cli("-w " + root.string() + " synth --games 7") == 0);
  int sgfs = 0;
  for (const auto& e : fs::directory_iterator(root / "corpus")) sgfs += e.path().extension() == ".sgf";
  CHECK(sgfs == 7);
  CHECK(read_csv(root / "corpus" / "players.csv").rows.size() == 4);
  CHECK(run_cli("-w " + root.string() + " synth") == 0);
  sgfs = 0;
  for (const auto& e : fs::directory_iterator(root / "corpus")) sgfs += e.path().extension() == ".sgf";
  CHECK(sgfs == 5);

  write_file(root / "config.txt", "games=oops\n");
  CHECK(run_cli("-w " + root.string() + " synth") == 2);
  write_file(root / "config.txt", "");

  CHECK(run_cli("-w " + root.string() + " ingest") == 0);
  CHECK(run_cli("-w " + root.string() + " analyze", &err) == 2);  // no engine anywhere
  CHECK(run_cli("-w " + root.string() + " features") == 0);
  write_file(root / "features" / "features.csv", "not,a,feature,table\n");
  CHECK(run_cli("-w " + root.string() + " train", &err) == 4);
  CHECK(run_cli("-w " + root.string() + " train --mask MX") == 2);
}

TEST_CASE("cli: engine from the environment") {
  auto root = scratch("cli_env");
  CHECK(run_cli("-w " + root.string() + " synth --games 4 --players 3") == 0);
  CHECK(run_cli("-w " + root.string() + " ingest") == 0);
  CHECK(run_cli("-w " + root.string() + " analyze", nullptr) == 2);
  CHECK(::setenv("GOSTAT_ENGINE", "mock:seed=3", 1) == 0);
  CHECK(run_cli("-w " + root.string() + " analyze") == 0);
  ::unsetenv("GOSTAT_ENGINE");
  int files = 0;
  for (const auto& e : fs::directory_iterator(root / "analysis")) files += e.path().extension() == ".jsonl";
  CHECK(files == 4);
}
