// gostat command line: one subcommand per pipeline stage over a workspace.
#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "gostat/workspace.hpp"

namespace fs = std::filesystem;
namespace ws = gostat::workspace;
using gostat::Date;

namespace {

constexpr int kOk = 0, kUsage = 2, kMissing = 3, kData = 4;

Date parse_date_arg(const std::string& text, const char* flag) {
  auto d = Date::parse(text);
  if (!d) throw ws::UsageError(std::string(flag) + ": not a date: " + text);
  return *d;
}

struct SplitArgs {
  std::string train_end = "2017-12-31";
  std::string test_start = "2018-01-01";
  std::string test_end = "2021-12-31";

  void add(CLI::App* sub) {
    sub->add_option("--train-end", train_end, "last day of the training period")->capture_default_str();
    sub->add_option("--test-start", test_start, "first day of the test period")->capture_default_str();
    sub->add_option("--test-end", test_end, "last day of the test period")->capture_default_str();
  }
  gostat::predict::SplitSpec spec() const {
    gostat::predict::SplitSpec s{parse_date_arg(train_end, "--train-end"), parse_date_arg(test_start, "--test-start"),
                                 parse_date_arg(test_end, "--test-end")};
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw ws::UsageError(e.what());
    }
    return s;
  }
};

// "a:w,b:w" pairs.
std::vector<std::pair<std::string, double>> parse_mix(const std::string& text, const char* flag) {
  std::vector<std::pair<std::string, double>> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    auto colon = item.find(':');
    if (colon == std::string::npos) throw ws::UsageError(std::string(flag) + ": expected value:weight, got " + item);
    try {
      out.emplace_back(item.substr(0, colon), std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ws::UsageError(std::string(flag) + ": bad weight in " + item);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

gostat::predict::AblationMask parse_mask(const std::string& text) {
  gostat::predict::AblationMask m{false, false, false};
  for (char c : text) {
    switch (c) {
      case 'M': m.meta = true; break;
      case 'C': m.contextual = true; break;
      case 'I': m.ingame = true; break;
      default: throw ws::UsageError("--mask: use letters M, C, I (got " + text + ")");
    }
  }
  if (!m.meta && !m.contextual && !m.ingame) throw ws::UsageError("--mask: empty");
  return m;
}

// Config values fill every option of the chosen command not given on the
// command line.
void apply_config(CLI::App* sub, const ws::Config& config) {
  for (CLI::Option* opt : sub->get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    const std::string& key = opt->get_lnames().front();
    if (key == "help") continue;
    if (auto v = config.get(sub->get_name(), key)) {
      try {
        opt->add_result(*v);
        opt->run_callback();
      } catch (const CLI::Error& e) {
        throw ws::UsageError("config.txt " + key + ": " + e.what());
      }
    }
  }
}

void print_log(const ws::StageResult& r, const std::string& stage) {
  for (const auto& line : r.log) std::cerr << line << "\n";
  if (r.up_to_date) std::cerr << stage << ": up to date\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gostat: analytics pipeline for professional Go game records"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ws::tool_version());
  std::string root = ".";
  app.add_option("-w,--workspace", root, "workspace root directory")->capture_default_str();
  app.footer(
      "Exit codes: 0 ok, 2 usage, 3 missing dependency, 4 data or engine error.\n"
      "Options not given on the command line are read from <workspace>/config.txt (key=value,\n"
      "or <command>.key=value), then fall back to the defaults shown.");

  // synth
  gostat::synth::SyntheticSpec spec;
  std::string s_start = "2010-01-01", s_end = "2021-12-31", komi_mix, region_mix;
  auto* c_synth = app.add_subcommand("synth", "write a seeded synthetic corpus to <workspace>/corpus");
  c_synth->add_option("--players", spec.n_players, "number of players")->capture_default_str();
  c_synth->add_option("--games", spec.n_games, "number of games")->capture_default_str();
  c_synth->add_option("--seed", spec.seed, "random seed")->capture_default_str();
  c_synth->add_option("--start", s_start, "first game date")->capture_default_str();
  c_synth->add_option("--end", s_end, "last game date")->capture_default_str();
  c_synth->add_option("--gap", spec.strength_gap, "minimum strength gap between neighbours (natural units)")
      ->capture_default_str();
  c_synth->add_option("--jitter", spec.strength_jitter, "extra random gap on top of --gap")->capture_default_str();
  c_synth->add_option("--black-advantage", spec.black_advantage, "P(black wins) between equal players")
      ->capture_default_str();
  c_synth->add_option("--komi-mix", komi_mix, "komi:weight list, e.g. 6.5:0.6,7.5:0.4");
  c_synth->add_option("--region-mix", region_mix, "region:weight list, e.g. CHN:0.5,KOR:0.5");
  c_synth->add_option("--mistake-rate", spec.mistake_rate, "chance of one injected unstable pair per game")
      ->capture_default_str();
  c_synth->add_option("--mistake-size", spec.mistake_size, "winrate lost by an injected mistake")
      ->capture_default_str();
  c_synth->add_option("--min-moves", spec.min_moves, "shortest game")->capture_default_str();
  c_synth->add_option("--max-moves", spec.max_moves, "longest game")->capture_default_str();

  // ingest
  std::string corpus, players, tournaments, blocklist;
  bool keep_handicap = false, keep_dateless = false, keep_nonstandard = false;
  auto* c_ingest = app.add_subcommand("ingest", "parse and clean the corpus into catalog/");
  c_ingest->add_option("corpus", corpus, "corpus directory (default <workspace>/corpus)");
  c_ingest->add_option("--players", players, "player table (default <corpus>/players.csv)");
  c_ingest->add_option("--tournaments", tournaments, "tournament table (default <corpus>/tournaments.csv)");
  c_ingest->add_option("--blocklist", blocklist, "event blocklist (default <corpus>/blocklist.txt if present)");
  c_ingest->add_flag("--keep-handicap", keep_handicap, "do not exclude handicap games");
  c_ingest->add_flag("--keep-dateless", keep_dateless, "do not exclude games without a date");
  c_ingest->add_flag("--keep-nonstandard", keep_nonstandard, "do not exclude boards other than 19x19");

  // analyze
  ws::AnalyzeOptions an;
  std::string scripts;
  int timeout_s = 60;
  auto* c_analyze = app.add_subcommand("analyze", "evaluate every kept game with an engine into analysis/");
  c_analyze->add_option("--engine", an.engine, "mock:seed=N or cmd:<command>; default $GOSTAT_ENGINE");
  c_analyze->add_option("--workers", an.workers, "parallel engine instances")->capture_default_str();
  c_analyze->add_option("--initial-visits", an.policy.initial_visits, "visits per position")->capture_default_str();
  c_analyze->add_option("--escalated-visits", an.policy.escalated_visits, "visits for re-queried positions")
      ->capture_default_str();
  c_analyze->add_option("--winrate-jump", an.policy.winrate_jump, "re-query above this winrate change")
      ->capture_default_str();
  c_analyze->add_option("--score-jump", an.policy.score_jump, "re-query above this score change")
      ->capture_default_str();
  c_analyze->add_option("--rules", an.rules_label, "rules label sent to the engine")->capture_default_str();
  c_analyze->add_option("--scripts", scripts, "mock engine scripts (default <corpus>/engine_script)");
  c_analyze->add_option("--timeout", timeout_s, "seconds per engine reply")->capture_default_str();

  // features
  ws::FeaturesOptions fo;
  SplitArgs f_split;
  std::string freeze;
  auto* c_features = app.add_subcommand("features", "build one feature row per decided kept game");
  c_features->add_option("--workers", fo.workers, "threads")->capture_default_str();
  c_features->add_option("--freeze", freeze, "history cut-off for later games (default --test-start)");
  c_features->add_option("--short-window", fo.config.windows.short_window, "recent-form window")
      ->capture_default_str();
  c_features->add_option("--long-window", fo.config.windows.long_window, "long-form window")->capture_default_str();
  c_features->add_option("--recent", fo.config.ingame_recent, "analyzed games averaged for in-game columns")
      ->capture_default_str();
  f_split.add(c_features);

  // rate
  ws::RateOptions ro;
  SplitArgs r_split;
  std::vector<std::string> systems = {"whr"};
  auto* c_rate = app.add_subcommand("rate", "fit rating systems on the training period into ratings/");
  c_rate->add_option("--system", systems, "whr, elo, trueskill or all (repeatable)")->capture_default_str();
  c_rate->add_option("--elo-k", ro.elo.k, "Elo K factor")->capture_default_str();
  c_rate->add_option("--whr-w2", ro.whr.prior_variance_per_year, "WHR drift variance per year")->capture_default_str();
  r_split.add(c_rate);

  // train
  ws::TrainOptions to;
  SplitArgs t_split;
  std::string model = "gbdt", mask = "MCI";
  auto* c_train = app.add_subcommand("train", "fit a predictor on the training rows into models/");
  c_train->add_option("--model", model, "gbdt or logistic")->capture_default_str();
  c_train->add_option("--mask", mask, "feature groups: letters of M (meta), C (contextual), I (in-game)")
      ->capture_default_str();
  c_train->add_option("--trees", to.params.gbdt.n_trees, "boosting rounds")->capture_default_str();
  c_train->add_option("--depth", to.params.gbdt.depth, "tree depth")->capture_default_str();
  c_train->add_option("--shrinkage", to.params.gbdt.shrinkage, "learning rate")->capture_default_str();
  c_train->add_option("--min-leaf", to.params.gbdt.min_leaf, "rows per leaf")->capture_default_str();
  c_train->add_option("--epochs", to.params.logistic.epochs, "logistic epochs")->capture_default_str();
  t_split.add(c_train);

  // evaluate
  ws::EvaluateOptions eo;
  SplitArgs e_split;
  bool no_ablation = false;
  std::string ablation_model = "gbdt";
  auto* c_eval = app.add_subcommand("evaluate", "score every model and rating system on the test period");
  c_eval->add_flag("--no-ablation", no_ablation, "skip the feature-group ablation table");
  c_eval->add_option("--ablation-model", ablation_model, "model kind used for the ablation")->capture_default_str();
  e_split.add(c_eval);

  // report
  ws::ReportOptions rep;
  auto* c_report = app.add_subcommand("report", "descriptive tables into reports/");
  c_report->add_option("--top", rep.top_n, "rows kept in player and matchup tables")->capture_default_str();
  c_report->add_option("--length-bin", rep.length_bin, "move-count histogram bin width")->capture_default_str();
  c_report->add_option("--buckets", rep.whr_buckets, "rating buckets for loss tables")->capture_default_str();
  c_report->add_option("--opening", rep.opening_len, "moves counted as the opening")->capture_default_str();

  auto* c_status = app.add_subcommand("status", "print the workspace fingerprint and check recorded hashes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  fs::path wroot(root);
  try {
    if (sub != c_synth && sub != c_ingest && !fs::is_directory(wroot))
      throw ws::MissingDependency(wroot, "workspace directory");
    apply_config(sub, ws::Config::load(wroot));

    if (sub == c_synth) {
      spec.start = parse_date_arg(s_start, "--start");
      spec.end = parse_date_arg(s_end, "--end");
      if (!komi_mix.empty()) {
        spec.komi_mix.clear();
        for (auto& [k, w] : parse_mix(komi_mix, "--komi-mix")) spec.komi_mix.push_back({std::stod(k), w});
      }
      if (!region_mix.empty()) {
        spec.region_mix.clear();
        for (auto& [r, w] : parse_mix(region_mix, "--region-mix")) {
          auto region = gostat::catalog::parse_region(r);
          if (region == gostat::catalog::Region::Unknown) throw ws::UsageError("--region-mix: unknown region " + r);
          spec.region_mix.push_back({region, w});
        }
      }
      try {
        spec.validate();
      } catch (const std::invalid_argument& e) {
        throw ws::UsageError(e.what());
      }
      fs::create_directories(wroot);
      print_log(ws::synth(wroot, spec), "synth");
    } else if (sub == c_ingest) {
      ws::IngestOptions io;
      io.corpus = corpus;
      if (!players.empty()) io.players = players;
      if (!tournaments.empty()) io.tournaments = tournaments;
      if (!blocklist.empty()) io.blocklist = blocklist;
      io.rules.exclude_handicap = !keep_handicap;
      io.rules.exclude_dateless = !keep_dateless;
      io.rules.exclude_nonstandard_board = !keep_nonstandard;
      fs::create_directories(wroot);
      print_log(ws::ingest(wroot, io), "ingest");
    } else if (sub == c_analyze) {
      if (an.engine.empty())
        if (const char* env = std::getenv("GOSTAT_ENGINE")) an.engine = env;
      if (!scripts.empty()) an.scripts = scripts;
      if (timeout_s < 1) throw ws::UsageError("--timeout must be >= 1");
      an.timeout = std::chrono::seconds(timeout_s);
      try {
        an.policy.validate();
      } catch (const std::invalid_argument& e) {
        throw ws::UsageError(e.what());
      }
      print_log(ws::analyze(wroot, an), "analyze");
    } else if (sub == c_features) {
      fo.split = f_split.spec();
      if (!freeze.empty()) fo.config.freeze_at = parse_date_arg(freeze, "--freeze");
      print_log(ws::build_features(wroot, fo), "features");
    } else if (sub == c_rate) {
      ro.split = r_split.spec();
      ro.systems.clear();
      for (const auto& s : systems) {
        if (s == "all") {
          ro.systems = {gostat::rating::System::Elo, gostat::rating::System::TrueSkill, gostat::rating::System::Whr};
          break;
        }
        try {
          ro.systems.push_back(gostat::rating::parse_system(s));
        } catch (const std::invalid_argument&) {
          throw ws::UsageError("--system: unknown rating system " + s);
        }
      }
      print_log(ws::rate(wroot, ro), "rate");
    } else if (sub == c_train) {
      to.split = t_split.spec();
      try {
        to.kind = gostat::predict::parse_model_kind(model);
      } catch (const std::invalid_argument&) {
        throw ws::UsageError("--model: expected gbdt or logistic, got " + model);
      }
      to.mask = parse_mask(mask);
      print_log(ws::train(wroot, to), "train");
    } else if (sub == c_eval) {
      eo.split = e_split.spec();
      eo.ablation = !no_ablation;
      try {
        eo.ablation_model = gostat::predict::parse_model_kind(ablation_model);
      } catch (const std::invalid_argument&) {
        throw ws::UsageError("--ablation-model: expected gbdt or logistic, got " + ablation_model);
      }
      print_log(ws::evaluate(wroot, eo), "evaluate");
    } else if (sub == c_report) {
      print_log(ws::report(wroot, rep), "report");
    } else if (sub == c_status) {
      if (!fs::exists(wroot / "manifest.json")) throw ws::MissingDependency(wroot / "manifest.json");
      std::cout << ws::fingerprint(wroot) << "\n";
      auto bad = ws::verify_manifest(wroot);
      for (const auto& b : bad) std::cerr << "changed: " << b << "\n";
      return bad.empty() ? kOk : kData;
    }
  } catch (const ws::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ws::MissingDependency& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
