// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "gostat/catalog.hpp"
#include "gostat/csv.hpp"
#include "gostat/engine.hpp"
#include "gostat/features.hpp"
#include "gostat/predict.hpp"
#include "gostat/rating.hpp"
#include "gostat/synth.hpp"
#include "gostat/workspace.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace gostat;
namespace fs = std::filesystem;
namespace ws = gostat::workspace;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failures of a check.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ < 3) detail_ += (detail_.empty() ? "" : "; ") + what;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  Outcome result() const {
    if (failures_ == 0) return {true, notes_};
    return {false, std::to_string(failures_) + " failure(s): " + detail_};
  }

 private:
  int failures_ = 0;
  std::string detail_, notes_;
};

std::string fmt(double v, int d = 4) { return format_fixed(v, d); }

// ---- 1

Outcome parser_round_trip() {
  Checker c;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto r = testing::random_record(rng);
    auto back = sgf::parse_sgf(sgf::serialize_sgf(r));
    c.expect(back == r, "record " + std::to_string(i) + " changed");
  }
  auto a = sgf::parse_sgf("(;GM[1]FF[4]SZ[19]PB[A]PW[B]KM[6.5]RE[B+R];B[pd];W[dp])");
  c.expect(a.moves.size() == 2 && a.komi == 6.5 && a.result.kind == sgf::ResultKind::Resignation &&
               a.result.winner == sgf::Color::Black && a.black_name == "A" && a.white_name == "B",
           "two-move fixture");
  c.expect(a.moves.size() == 2 && a.moves[0].point == sgf::Point{15, 3} && a.moves[1].point == sgf::Point{3, 15},
           "two-move coordinates");
  c.expect(sgf::parse_sgf(sgf::serialize_sgf(a)) == a, "two-move round trip");
  auto b = sgf::parse_sgf("(;GM[1]FF[4]SZ[19])");
  c.expect(b.moves.empty() && b.result.kind == sgf::ResultKind::Unknown, "empty fixture");
  auto h = sgf::parse_sgf("(;GM[1]FF[4]SZ[19]HA[2]AB[dd][pp]PB[A]PW[B]DT[2019-01-01]RE[W+R];W[pd])");
  c.expect(h.handicap == 2 && h.has_setup_stones(), "handicap fixture");
  std::vector<sgf::GameRecord> one{h};
  auto verdict = catalog::ingest(one, {}, {}, {});
  c.expect(verdict[0].excluded == catalog::ExclusionReason::Handicap, "handicap fixture not excluded");
  return c.result();
}

// ---- 2

Outcome cleaning_rules() {
  Checker c;
  auto players = catalog::PlayerTable::from_csv(
      parse_csv("player_id,canonical_name,birth_date,gender,region,rank\n"
                "ke,Ke Jie,1997-08-02,Male,CHN,9\n"
                "shin,Shin Jinseo,2000-03-17,Male,KOR,9\n"
                "iyama,Iyama Yuta,1989-05-24,Male,JPN,9\n"));
  auto tournaments = catalog::TournamentTable::from_csv(
      parse_csv("category,edition,region_scope,importance,kind\n"
                "Samsung Cup,,International,WorldMajor,Elimination\n"));
  catalog::CleaningRules rules;
  rules.event_blocklist = catalog::parse_blocklist("# non-human or amateur events\nAI Cup\nAmateur\n");
  using R = catalog::ExclusionReason;
  struct Case {
    std::string props;
    std::optional<R> expected;
  };
  const std::string head = "PB[Ke Jie]PW[Shin Jinseo]EV[Samsung Cup]";
  std::vector<Case> cases = {
      {head + "DT[2019-01-01]RE[B+R]", std::nullopt},
      {head + "DT[2019-01-02]RE[W+2.5]", std::nullopt},
      {"PB[Iyama Yuta]PW[Ke Jie]DT[2019-01-03]RE[B+R]", std::nullopt},
      {head + "DT[2019-01-04]RE[0]", std::nullopt},  // draws are normal results
      {head + "DT[2019-01-05]RE[B+R]HA[2]AB[dd][pp]", R::Handicap},
      {head + "DT[2019-01-06]RE[W+R]HA[3]AB[dd][pp][dp]", R::Handicap},
      {head + "DT[2019-01-07]RE[W+F]", R::Abnormal},
      {head + "DT[2019-01-08]RE[B+T]", R::Abnormal},
      {"PB[Ke Jie]PW[Shin Jinseo]EV[World AI Cup]DT[2019-01-09]RE[B+R]", R::Blocklisted},
      {"PB[Ke Jie]PW[Shin Jinseo]EV[National Amateur Open]DT[2019-01-10]RE[B+R]", R::Blocklisted},
      {head + "RE[W+R]", R::NoDate},
      {head + "DT[2019-01-01]RE[B+R]", R::Duplicate},  // same content as the first game
  };
  std::vector<sgf::GameRecord> recs;
  for (const auto& k : cases) recs.push_back(sgf::parse_sgf("(;GM[1]FF[4]SZ[19]" + k.props + ";B[pd];W[dp])"));
  auto out = catalog::ingest(recs, players, tournaments, rules);
  c.expect(out.size() == 12, "every record needs a verdict");
  for (std::size_t i = 0; i < out.size() && i < cases.size(); ++i) {
    auto got = out[i].excluded ? catalog::to_string(*out[i].excluded) : "kept";
    auto want = cases[i].expected ? catalog::to_string(*cases[i].expected) : "kept";
    c.expect(out[i].excluded == cases[i].expected,
             "game " + std::to_string(i + 1) + " " + got + " instead of " + want);
  }
  return c.result();
}

// ---- 3

Outcome region_partition() {
  Checker c;
  Rng rng(3);
  const catalog::Region regions[] = {catalog::Region::CHN, catalog::Region::KOR, catalog::Region::JPN,
                                     catalog::Region::TWN, catalog::Region::Other, catalog::Region::Unknown};
  for (int t = 0; t < 50; ++t) {
    std::vector<catalog::CatalogedGame> games(rng.below(400));
    for (auto& g : games) {
      g.black.region = regions[rng.below(6)];
      g.white.region = regions[rng.below(6)];
      g.region_pair = catalog::region_pair(g.black.region, g.white.region);
    }
    auto s = catalog::summarize_regions(games);
    c.expect(s.total == static_cast<long>(games.size()), "total is not the game count");
    c.expect(s.cr + s.chn + s.kor + s.jpn + s.others == s.total, "buckets do not sum to the total");
  }
  // published corpus counts obey the same rule
  catalog::RegionSummary published;
  published.total = 98043;
  published.cr = 12963;
  published.chn = 26977;
  published.kor = 19455;
  published.jpn = 32907;
  published.others = 5741;
  c.expect(published.cr + published.chn + published.kor + published.jpn + published.others == published.total,
           "reference counts");
  return c.result();
}

// ---- 4

Outcome escalation_policy() {
  Checker c;
  synth::SyntheticSpec spec;
  spec.n_games = 60;
  spec.mistake_rate = 1.0;
  auto corpus = synth::generate_synthetic(spec);
  std::map<std::string, engine::MockEngine::Script> scripts;
  for (auto& g : corpus.games) {
    auto script = g.script;
    for (auto& e : script) {
      e.escalated_winrate_black = 0.5 + 0.5 * (e.winrate_black - 0.5);
      e.escalated_score_black = 0.5 * e.score_black;
    }
    // the engine serves what was written to disk
    scripts.emplace(g.record.game_id, engine::parse_script(engine::script_to_json(g.record.game_id, script)));
  }
  engine::MockEngine mock(scripts, std::nullopt);
  engine::AnalysisPolicy policy;
  long pairs = 0, violations = 0;
  for (const auto& g : corpus.games) {
    auto a = engine::evaluate_game(g.record, mock, policy);
    const auto& s = scripts.at(g.record.game_id);
    c.expect(a.evals.size() == s.size(), "incomplete analysis");
    for (std::size_t k = 0; k < a.evals.size(); ++k) {
      bool violating = false;
      if (k > 0) {
        ++pairs;
        violating = std::abs(s[k].winrate_black - s[k - 1].winrate_black) > 0.10 ||
                    std::abs(s[k].score_black - s[k - 1].score_black) > 5.0;
      }
      violations += violating;
      const auto& e = a.evals[k];
      c.expect(violating == (e.visits_used == 1000), g.record.game_id + " position " + std::to_string(k));
      if (violating)
        c.expect(e.winrate_black == *s[k].escalated_winrate_black && e.initial_winrate_black == s[k].winrate_black,
                 "deep result not kept at " + std::to_string(k));
    }
  }
  c.expect(violations >= 60, "corpus has too few violating pairs to test anything");
  c.note(std::to_string(pairs) + " pairs, " + std::to_string(violations) + " escalated");
  return c.result();
}

// ---- 5

Outcome gm_ur_oracles() {
  Checker c;
  Rng rng(5);
  int with_gm = 0, with_ur = 0;
  for (int t = 0; t < 200; ++t) {
    int n = 1 + static_cast<int>(rng.below(200));
    auto w = testing::random_walk(rng, n, rng.uniform(-0.1, 0.1));
    auto s = testing::scores_for(w);
    // occasional injected pairs so the unstable-round check sees positives
    if (n > 20 && rng.chance(0.5)) {
      int x = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 3)));
      double sign = x % 2 == 1 ? 1.0 : -1.0;
      w[x] = std::clamp(w[x - 1] - sign * 0.12, 0.0, 1.0);
      w[x + 1] = std::clamp(w[x] + sign * 0.115, 0.0, 1.0);
      s = testing::scores_for(w);
    }
    auto series = features::EvalSeries::from_values(w, s);
    auto g = features::detect_garbage_moves(series);
    c.expect(g == testing::gm_oracle(w, s, 4), "garbage moves differ from the suffix scan");
    if (g.start) {
      ++with_gm;
      // a suffix: it runs to the last move and the ratio counts exactly its moves
      c.expect(*g.start >= 1 && *g.start <= n, "start out of range");
      c.expect(std::abs(g.ratio - double(n - *g.start + 1) / n) < 1e-15, "ratio is not the suffix share");
    }
    auto ur = features::detect_unstable_rounds(series);
    auto oracle = testing::ur_oracle(w, s);
    c.expect(std::set<int>(ur.begin(), ur.end()) == oracle, "unstable rounds differ from the threshold re-check");
    c.expect(std::is_sorted(ur.begin(), ur.end()) && std::adjacent_find(ur.begin(), ur.end()) == ur.end(),
             "unstable rounds not ascending and distinct");
    with_ur += !ur.empty();
  }
  c.expect(with_gm > 20 && with_ur > 20, "generator too tame");
  c.note(std::to_string(with_gm) + " with garbage, " + std::to_string(with_ur) + " with unstable rounds");
  return c.result();
}

// ---- 6

Outcome whr_oracle() {
  Checker c;
  using rating::RatedGame;
  Date d1(2020, 1, 1), d2(2020, 7, 1);
  std::vector<RatedGame> games = {{"a", "b", d1, 1.0}, {"b", "c", d1, 1.0}, {"c", "a", d1, 1.0},
                                  {"a", "b", d2, 1.0}, {"a", "c", d2, 0.0}};
  rating::WhrParams params;
  params.prior_variance_per_year = 0.5;
  auto h = rating::whr_fit(games, params);
  c.expect(h.converged, "whr did not converge");
  testing::WhrProblem prob;
  prob.params = params;
  std::map<std::pair<std::string, int>, int> node;
  std::map<std::string, int> pid = {{"a", 0}, {"b", 1}, {"c", 2}};
  auto node_of = [&](const std::string& p, const Date& d) {
    auto key = std::make_pair(p, d.days());
    if (!node.count(key)) {
      node[key] = static_cast<int>(prob.nodes.size());
      prob.nodes.push_back({pid[p], d.days()});
    }
    return node[key];
  };
  for (const auto& g : games)
    prob.games.emplace_back(node_of(g.black_id, g.date), node_of(g.white_id, g.date), g.black_score);
  auto best = testing::grid_argmax(prob);
  c.expect(testing::locally_optimal(prob, best, 0.005), "grid search did not settle");
  double worst = 0;
  for (const auto& [key, i] : node) {
    const auto& pts = h.players[key.first];
    auto it = std::find_if(pts.begin(), pts.end(), [&](const auto& p) { return p.date.days() == key.second; });
    c.expect(it != pts.end(), "missing rating point");
    if (it != pts.end()) worst = std::max(worst, std::abs(it->rating - best[static_cast<std::size_t>(i)]));
  }
  c.expect(worst < 0.01, "max deviation " + fmt(worst));

  std::vector<RatedGame> pair = {{"x", "y", d1, 1.0}};
  auto s = rating::whr_fit(pair);
  double rx = s.players["x"][0].rating, ry = s.players["y"][0].rating;
  c.expect(rx > 0 && ry < 0, "winner must rate above loser");
  c.expect(std::abs(rx + ry) < rating::WhrParams{}.convergence_tol, "ratings not opposite: " + fmt(rx + ry, 8));
  c.note("max deviation " + fmt(worst));
  return c.result();
}

// ---- 7

Outcome elo_trueskill_identities() {
  Checker c;
  Rng rng(7);
  rating::TrueSkillParams tp;
  for (int i = 0; i < 10000; ++i) {
    double ra = rng.uniform(1000, 2800), rb = rng.uniform(1000, 2800);
    c.expect(std::abs(rating::elo_expected(ra, rb) + rating::elo_expected(rb, ra) - 1.0) < 1e-12, "elo complement");
    double outcome = rng.chance(0.5) ? 1.0 : 0.0;
    auto [na, nb] = rating::elo_update(ra, rb, outcome, 20);
    c.expect(std::abs((na + nb) - (ra + rb)) < 1e-9, "elo zero-sum");
    c.expect(outcome == 1.0 ? (na > ra && nb < rb) : (na < ra && nb > rb), "elo direction");
    rating::Gaussian ga{rng.uniform(10, 40), rng.uniform(1, 9)}, gb{rng.uniform(10, 40), rng.uniform(1, 9)};
    c.expect(std::abs(rating::trueskill_win_probability(ga, gb, tp) + rating::trueskill_win_probability(gb, ga, tp) -
                      1.0) < 1e-12,
             "trueskill complement");
    auto [ta, tb] = rating::trueskill_update_1v1(ga, gb, outcome, tp);
    c.expect(outcome == 1.0 ? (ta.mu > ga.mu && tb.mu < gb.mu) : (ta.mu < ga.mu && tb.mu > gb.mu),
             "trueskill direction");
  }
  double worst = 0;
  worst = std::max(worst, testing::quadrature_error(rating::Gaussian{}, rating::Gaussian{}, 1.0, tp));
  worst = std::max(worst, testing::quadrature_error({29.0, 4.0}, {22.5, 6.5}, 0.0, tp));
  worst = std::max(worst, testing::quadrature_error({18.0, 2.0}, {31.0, 7.0}, 1.0, tp));
  c.expect(worst < 1e-3, "quadrature deviation " + format_shortest(worst));
  c.note("quadrature deviation " + format_shortest(worst));
  return c.result();
}

// ---- 8, 11, 12 share pipeline runs

struct PipelineRun {
  fs::path root;
  double seconds = 0;
  std::string error;
};

PipelineRun run_pipeline(const std::string& name, int workers) {
  PipelineRun run;
  run.root = fs::temp_directory_path() / ("gostat_acceptance_" + name);
  fs::remove_all(run.root);
  fs::create_directories(run.root);
  auto t0 = std::chrono::steady_clock::now();
  try {
    synth::SyntheticSpec spec;  // 20 players, 300 games, gaps >= 1.0
    spec.seed = 7;
    ws::synth(run.root, spec);
    ws::ingest(run.root, {});
    ws::AnalyzeOptions an;
    an.engine = "mock:seed=7";
    an.workers = workers;
    ws::analyze(run.root, an);
    ws::FeaturesOptions fo;
    fo.workers = workers;
    ws::build_features(run.root, fo);
    ws::RateOptions ro;
    ro.systems = {rating::System::Elo, rating::System::TrueSkill, rating::System::Whr};
    ws::rate(run.root, ro);
    ws::train(run.root, {});
    ws::evaluate(run.root, {});
    ws::report(run.root, {});
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::map<std::string, double> mean_acc(const fs::path& root) {
  auto t = read_csv(root / "evaluation" / "metrics.csv");
  auto col = t.require_column("Mean_ACC");
  std::map<std::string, double> out;
  for (const auto& r : t.rows) out[r[0]] = r[col].empty() ? std::nan("") : std::stod(r[col]);
  return out;
}

Outcome end_to_end(const PipelineRun& run) {
  Checker c;
  c.expect(run.error.empty(), "pipeline failed: " + run.error);
  if (!run.error.empty()) return c.result();
  c.expect(run.seconds < 120, "took " + fmt(run.seconds, 1) + " s");
  auto acc = mean_acc(run.root);
  double best_rating = 0;
  for (const char* sys : {"elo", "trueskill", "whr"}) {
    c.expect(acc.contains(sys), std::string("no metrics for ") + sys);
    if (!acc.contains(sys)) continue;
    c.expect(acc[sys] >= 0.60, std::string(sys) + " ACC " + fmt(acc[sys]));
    best_rating = std::max(best_rating, acc[sys]);
  }
  c.expect(acc.contains("gbdt"), "no gbdt metrics");
  if (acc.contains("gbdt"))
    c.expect(acc["gbdt"] >= best_rating - 0.02, "gbdt ACC " + fmt(acc["gbdt"]) + " vs rating " + fmt(best_rating));
  c.note("gbdt " + fmt(acc["gbdt"]) + ", elo " + fmt(acc["elo"]) + ", trueskill " + fmt(acc["trueskill"]) +
         ", whr " + fmt(acc["whr"]) + ", pipeline " + fmt(run.seconds, 1) + " s");
  return c.result();
}

// ---- 9

bool same_bytes(const features::FeatureVector& a, const features::FeatureVector& b) {
  return a.game_id == b.game_id && a.date == b.date && a.label == b.label && a.category == b.category &&
         a.values.size() == b.values.size() &&
         std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

Outcome leakage(const PipelineRun& run) {
  Checker c;
  c.expect(run.error.empty(), "pipeline failed: " + run.error);
  if (!run.error.empty()) return c.result();
  auto games = ws::load_catalog(run.root);
  auto analyses = ws::load_analyses(run.root, games);
  predict::SplitSpec split;
  features::FeatureConfig cfg;
  cfg.freeze_at = split.test_start;
  auto rows = features::build_features(games, analyses, cfg, 4);
  int checked = 0;
  for (const auto& r : rows) {
    if (r.date < split.test_start) continue;
    // every other test-period game removed
    std::vector<catalog::CatalogedGame> pruned;
    for (const auto& g : games)
      if (!g.game.date || *g.game.date < split.test_start || g.game.game_id == r.game_id) pruned.push_back(g);
    auto again = features::build_features(pruned, analyses, cfg, 4);
    auto it = std::find_if(again.begin(), again.end(), [&](const auto& x) { return x.game_id == r.game_id; });
    c.expect(it != again.end() && same_bytes(*it, r), "row " + r.game_id + " changed");
    ++checked;
  }
  c.expect(checked > 50, "only " + std::to_string(checked) + " test rows");
  c.note(std::to_string(checked) + " test-period rows");
  return c.result();
}

// ---- 10

Outcome metric_fixture() {
  Checker c;
  using catalog::RegionPair;
  std::vector<double> p{0.8, 0.4, 0.5, 0.3, 0.9, 0.6};
  std::vector<int> y{1, 1, 0, 0, 0, 1};
  std::vector<RegionPair> cat{RegionPair::CR, RegionPair::CR, RegionPair::CR,
                              RegionPair::KOR, RegionPair::KOR, RegionPair::KOR};
  auto m = predict::evaluate(p, y, cat);
  // squared errors by hand: .04 .36 .25 | .09 .81 .16
  c.expect(m.row("Mean").n == 6 && *m.row("Mean").acc == 3.0 / 6, "Mean ACC");
  c.expect(std::abs(*m.row("Mean").mse - 1.71 / 6) < 1e-15, "Mean MSE " + fmt(*m.row("Mean").mse, 17));
  c.expect(*m.row("CR").acc == 1.0 / 3 && std::abs(*m.row("CR").mse - 0.65 / 3) < 1e-15, "CR row");
  c.expect(*m.row("KOR").acc == 2.0 / 3 && std::abs(*m.row("KOR").mse - 1.06 / 3) < 1e-15, "KOR row");
  for (const char* e : {"CHN", "JPN", "Others"}) c.expect(m.row(e).n == 0 && !m.row(e).acc, "empty row");
  std::vector<double> half(6, 0.5);
  auto h = predict::evaluate(half, y, cat);
  c.expect(*h.row("Mean").mse == 0.25, "p = 0.5 must give MSE 0.25");
  std::vector<double> perfect{1, 1, 0, 0, 0, 1};
  auto pf = predict::evaluate(perfect, y, cat);
  c.expect(*pf.row("Mean").acc == 1.0 && *pf.row("Mean").mse == 0.0, "perfect predictions");
  return c.result();
}

// ---- 11

Outcome ablation(const PipelineRun& run) {
  Checker c;
  c.expect(run.error.empty(), "pipeline failed: " + run.error);
  if (!run.error.empty()) return c.result();
  auto t = read_csv(run.root / "evaluation" / "ablation.csv");
  std::vector<std::string> labels;
  for (const auto& r : t.rows) labels.push_back(r[0]);
  c.expect(labels == std::vector<std::string>{"M", "C", "I", "MC", "MCI"}, "mask rows");
  std::vector<std::string> head = {"mask", "meta", "contextual", "ingame"};
  for (const char* cat : predict::kMetricRows)
    for (const char* m : {"_ACC", "_MSE", "_n"}) head.push_back(std::string(cat) + m);
  c.expect(t.header == head, "table layout");

  // the all-groups mask against a plain run of the saved model
  auto rows = ws::load_features(run.root);
  predict::SplitSpec split;
  auto abl = predict::run_ablation(rows, {predict::AblationMask{}}, predict::ModelKind::Gbdt, split);
  auto model = predict::model_from_json(read_file(run.root / "models" / "gbdt.json"));
  auto plain = predict::evaluate(*model, predict::chronological_split(rows, split).test);
  c.expect(abl.size() == 1 && abl[0].metrics == plain, "all-groups ablation differs from the plain evaluation");
  auto metrics = read_csv(run.root / "evaluation" / "metrics.csv");
  std::vector<std::string> gbdt_row, mci_row;
  for (const auto& r : metrics.rows)
    if (r[0] == "gbdt") gbdt_row.assign(r.begin() + 1, r.end());
  for (const auto& r : t.rows)
    if (r[0] == "MCI") mci_row.assign(r.begin() + 4, r.end());
  c.expect(!gbdt_row.empty() && gbdt_row == mci_row, "ablation.csv MCI row differs from metrics.csv gbdt row");
  return c.result();
}

// ---- 12

Outcome determinism(const PipelineRun& a, const PipelineRun& b) {
  Checker c;
  c.expect(a.error.empty() && b.error.empty(), "pipeline failed: " + a.error + b.error);
  if (!a.error.empty() || !b.error.empty()) return c.result();
  auto fa = ws::fingerprint(a.root), fb = ws::fingerprint(b.root);
  c.expect(fa == fb, "fingerprints differ");
  c.expect(ws::verify_manifest(a.root).empty() && ws::verify_manifest(b.root).empty(), "manifest out of date");
  c.note("workers 4 vs 1, fingerprint " + fa.substr(0, 16));
  return c.result();
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << (id < 10 ? " " : "") << id << "  " << name << "  (" << fmt(s, 2)
              << " s" << (o.detail.empty() ? "" : "; " + o.detail) << ")" << std::endl;
  };

  report(1, "parser round-trip", [] {
    auto t0 = std::chrono::steady_clock::now();
    auto o = parser_round_trip();
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && s >= 5) return Outcome{false, "took " + fmt(s, 2) + " s"};
    return o;
  });
  report(2, "cleaning rules", cleaning_rules);
  report(3, "region partition", region_partition);
  report(4, "escalation policy", escalation_policy);
  report(5, "GM/UR oracles", [] {
    auto t0 = std::chrono::steady_clock::now();
    auto o = gm_ur_oracles();
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && s >= 10) return Outcome{false, "took " + fmt(s, 2) + " s"};
    return o;
  });
  report(6, "WHR oracle", [] {
    auto t0 = std::chrono::steady_clock::now();
    auto o = whr_oracle();
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.pass && s >= 60) return Outcome{false, "took " + fmt(s, 2) + " s"};
    return o;
  });
  report(7, "Elo/TrueSkill identities", elo_trueskill_identities);

  PipelineRun run4 = run_pipeline("w4", 4);
  report(8, "synthetic end-to-end", [&] { return end_to_end(run4); });
  report(9, "leakage", [&] { return leakage(run4); });
  report(10, "metric correctness", metric_fixture);
  report(11, "ablation harness", [&] { return ablation(run4); });
  PipelineRun run1 = run_pipeline("w1", 1);
  report(12, "determinism", [&] { return determinism(run4, run1); });

  std::cout << (failed == 0 ? "all 12 criteria pass" : std::to_string(failed) + " criteria fail") << std::endl;
  return failed == 0 ? 0 : 1;
}
