#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gostat/catalog.hpp"
#include "gostat/date.hpp"
#include "gostat/engine.hpp"
#include "gostat/sgf.hpp"

namespace gostat::synth {

struct KomiShare {
  double komi = 6.5;
  double weight = 1.0;
};

struct RegionShare {
  catalog::Region region = catalog::Region::CHN;
  double weight = 1.0;
};

// Seeded corpus with Bradley-Terry outcomes and scripted engine output.
struct SyntheticSpec {
  int n_players = 20;
  int n_games = 300;
  Date start = Date(2010, 1, 1);
  Date end = Date(2021, 12, 31);
  // Adjacent true strengths differ by gap + jitter * U[0,1), natural units.
  double strength_gap = 1.0;
  double strength_jitter = 0.25;
  // P(black wins) between equal players.
  double black_advantage = 0.53;
  std::vector<KomiShare> komi_mix = {{6.5, 0.55}, {7.5, 0.40}, {5.5, 0.05}};
  std::vector<RegionShare> region_mix = {{catalog::Region::CHN, 0.35},
                                         {catalog::Region::KOR, 0.30},
                                         {catalog::Region::JPN, 0.20},
                                         {catalog::Region::TWN, 0.10},
                                         {catalog::Region::Other, 0.05}};
  // Chance that a game carries one injected unstable pair.
  double mistake_rate = 0.3;
  // Winrate lost by the first mover of the pair; the reply loses 0.005 less.
  double mistake_size = 0.12;
  int min_moves = 120;
  int max_moves = 300;
  std::uint64_t seed = 7;

  void validate() const;  // std::invalid_argument
};

struct SyntheticGame {
  std::string file_name;
  sgf::GameRecord record;  // game_id filled
  engine::MockEngine::Script script;
  std::string black_id, white_id;
  double p_black = 0.5;
  int decided_at = 0;         // first move of the decided tail
  std::vector<int> mistakes;  // first ordinal of each injected pair
};

struct SyntheticCorpus {
  std::vector<catalog::PlayerProfile> players;
  std::vector<double> strengths;  // parallel to players
  std::vector<catalog::TournamentInfo> tournaments;
  std::vector<SyntheticGame> games;  // date order
  std::vector<std::string> warnings;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

// <dir>/gNNNN.sgf, players.csv, tournaments.csv, engine_script/<game_id>.json
// and truth.csv. Stale .sgf and script files in `dir` are removed first.
void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace gostat::synth
