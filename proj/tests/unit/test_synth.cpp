#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gostat/csv.hpp"
#include "gostat/features.hpp"
#include "gostat/synth.hpp"

using namespace gostat;
using namespace gostat::synth;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("gostat_synth_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_file(e.path());
  return out;
}

features::EvalSeries series_of(const SyntheticGame& g) {
  std::vector<double> w, s;
  for (const auto& e : g.script) {
    w.push_back(e.winrate_black);
    s.push_back(e.score_black);
  }
  return features::EvalSeries::from_values(w, s);
}

}  // namespace

TEST_CASE("same seed writes a byte-identical corpus") {
  SyntheticSpec spec;
  spec.n_games = 60;
  auto a = scratch("a"), b = scratch("b");
  write_corpus(generate_synthetic(spec), a);
  write_corpus(generate_synthetic(spec), b);
  auto ta = read_tree(a), tb = read_tree(b);
  CHECK(ta.size() == 60 + 60 + 3);
  CHECK(ta == tb);
  spec.seed = 8;
  write_corpus(generate_synthetic(spec), b);
  CHECK(read_tree(b) != ta);
}

TEST_CASE("rewriting a directory drops stale games") {
  SyntheticSpec spec;
  spec.n_games = 20;
  auto dir = scratch("stale");
  write_corpus(generate_synthetic(spec), dir);
  spec.n_games = 5;
  spec.seed = 99;
  write_corpus(generate_synthetic(spec), dir);
  int sgfs = 0, scripts = 0;
  for (const auto& e : fs::directory_iterator(dir)) sgfs += e.path().extension() == ".sgf";
  for (const auto& e : fs::directory_iterator(dir / "engine_script")) scripts += e.is_regular_file();
  CHECK(sgfs == 5);
  CHECK(scripts == 5);
}

TEST_CASE("zero games or players gives an empty corpus and a warning") {
  SyntheticSpec spec;
  spec.n_games = 0;
  auto c = generate_synthetic(spec);
  CHECK(c.games.empty());
  CHECK_FALSE(c.warnings.empty());
  spec.n_games = 10;
  spec.n_players = 0;
  c = generate_synthetic(spec);
  CHECK(c.games.empty());
  CHECK_FALSE(c.warnings.empty());
  auto dir = scratch("empty");
  write_corpus(c, dir);
  CHECK(parse_csv(read_file(dir / "truth.csv")).rows.empty());
}

TEST_CASE("spec validation") {
  SyntheticSpec bad;
  bad.black_advantage = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.end = Date(2000, 1, 1);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.komi_mix = {{6.5, 0.0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.min_moves = 10;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("true strengths respect the minimum gap and players are distinct") {
  SyntheticSpec spec;
  auto c = generate_synthetic(spec);
  REQUIRE(c.strengths.size() == 20);
  for (std::size_t i = 1; i < c.strengths.size(); ++i) CHECK(c.strengths[i] - c.strengths[i - 1] >= 1.0);
  for (const auto& g : c.games) {
    CHECK(g.black_id != g.white_id);
    CHECK(*g.record.date >= spec.start);
    CHECK(*g.record.date <= spec.end);
    CHECK(g.record.game_id == sgf::compute_game_id(g.record));
    CHECK(g.script.size() == g.record.moves.size() + 1);
  }
}

TEST_CASE("equal strengths: black wins at the configured rate") {
  SyntheticSpec spec;
  spec.strength_gap = 0;
  spec.strength_jitter = 0;
  spec.n_games = 4000;
  spec.min_moves = spec.max_moves = 40;
  spec.black_advantage = 0.56;
  auto c = generate_synthetic(spec);
  int black = 0;
  for (const auto& g : c.games) black += g.record.result.winner == sgf::Color::Black;
  double sigma = std::sqrt(0.56 * 0.44 / 4000);
  CHECK(std::abs(black / 4000.0 - 0.56) < 3 * sigma);
}

TEST_CASE("scripts drift toward the winner and end decided") {
  SyntheticSpec spec;
  spec.n_games = 80;
  auto c = generate_synthetic(spec);
  for (const auto& g : c.games) {
    bool black_won = g.record.result.winner == sgf::Color::Black;
    double last = g.script.back().winrate_black;
    CHECK((black_won ? last > 0.9 : last < 0.1));
    auto gm = features::detect_garbage_moves(series_of(g));
    REQUIRE(gm.start);
    // the smoothing window delays detection by at most its length
    CHECK(*gm.start >= g.decided_at - 1);
    CHECK(*gm.start <= g.decided_at + 4);
  }
}

TEST_CASE("injected mistakes are the unstable rounds") {
  SyntheticSpec spec;
  spec.n_games = 120;
  spec.mistake_rate = 0.5;
  auto c = generate_synthetic(spec);
  int injected = 0;
  for (const auto& g : c.games) {
    auto s = series_of(g);
    auto gm = features::detect_garbage_moves(s);
    auto ur = features::detect_unstable_rounds(s.prefix(*gm.start - 1));
    std::vector<int> expected;
    for (int x : g.mistakes) expected.insert(expected.end(), {x, x + 1});
    CHECK(ur == expected);
    injected += !g.mistakes.empty();
  }
  CHECK(injected > 30);
}

TEST_CASE("stronger players match the engine more often") {
  SyntheticSpec spec;
  spec.n_games = 200;
  auto c = generate_synthetic(spec);
  double hits_low = 0, moves_low = 0, hits_high = 0, moves_high = 0;
  for (const auto& g : c.games) {
    for (std::size_t k = 0; k < g.record.moves.size(); ++k) {
      const auto& m = g.record.moves[k];
      const std::string& id = m.color == sgf::Color::Black ? g.black_id : g.white_id;
      bool hit = g.script[k].top_moves.front().point == m.point;
      if (id <= "p05") hits_low += hit, moves_low += 1;
      if (id >= "p16") hits_high += hit, moves_high += 1;
    }
  }
  CHECK(hits_high / moves_high > hits_low / moves_low + 0.15);
}
