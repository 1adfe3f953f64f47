#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gostat/catalog.hpp"
#include "gostat/csv.hpp"
#include "gostat/engine.hpp"
#include "gostat/rating.hpp"

namespace gostat::features {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool missing(double v) { return std::isnan(v); }

// Black-perspective evaluations for positions 0..n plus what was played.
struct EvalSeries {
  std::vector<double> winrate;
  std::vector<double> score;
  std::vector<std::vector<engine::TopMove>> top_moves;  // per position, may be empty
  std::vector<sgf::Color> movers;                       // moves 1..n
  std::vector<std::optional<sgf::Point>> played;        // moves 1..n

  int moves() const { return static_cast<int>(winrate.size()) - 1; }
  sgf::Color mover(int ordinal) const { return movers[static_cast<std::size_t>(ordinal - 1)]; }
  // Winrate / score of `c` at position k.
  double winrate_of(sgf::Color c, int k) const;
  double score_of(sgf::Color c, int k) const;
  void validate() const;
  // Positions 0..last_move.
  EvalSeries prefix(int last_move) const;

  // Colors and played points come from the record; without one, moves
  // alternate from Black and nothing is marked as played.
  static EvalSeries from(const engine::AnalyzedGame& analyzed, const sgf::GameRecord* record = nullptr);
  // Plain series without recommendations, alternating from Black.
  static EvalSeries from_values(std::vector<double> winrate, std::vector<double> score);
};

struct GmPolicy {
  int window = 4;
  double winrate_bar = 0.90;
  double score_bar = 3.0;
  void validate() const;
};

struct UrPolicy {
  double loss_winrate_bar = 0.10;
  double loss_score_bar = 5.0;
  double similarity_winrate = 0.02;
  double similarity_score = 1.0;
  void validate() const;
};

struct StatsPolicy {
  int recommend_k = 1;
  int opening_len = 50;
  double ar_winrate = 0.55;
  double ar_score = 3.0;
  double sar_winrate = 0.60;
  double sar_score = 5.0;
};

struct GmResult {
  std::optional<int> start;  // first garbage move
  double ratio = 0.0;
  bool operator==(const GmResult&) const = default;
};

// Trailing mean over min(window, k + 1) positions.
std::vector<double> trailing_mean(std::span<const double> values, int window);

GmResult detect_garbage_moves(const EvalSeries& series, const GmPolicy& policy = {});
// Ordinals of unstable moves, ascending. Run on the series with the GM
// suffix already cut off.
std::vector<int> detect_unstable_rounds(const EvalSeries& series, const UrPolicy& policy = {});

// Positions kept after GM then UR removal (index = position 0..n).
std::vector<bool> kept_positions(const EvalSeries& series, const GmPolicy& gm, const UrPolicy& ur, GmResult* gm_out,
                                 std::vector<int>* ur_out, bool* degenerate);

struct InGameStats {
  double gm_ratio = 0.0;
  int ur_count = 0;
  double mwr = kMissing;
  double ms = kMissing;
  double mlwr = kMissing;
  double mls = kMissing;
  int ar = 0;
  int sar = 0;
  double cr = kMissing;
  double cr_opening = kMissing;
  bool degenerate = false;  // every move was garbage; stats use the full series
};

// The player-dependent fields over the positions flagged in `keep`.
InGameStats stats_from_mask(const EvalSeries& series, sgf::Color player, const std::vector<bool>& keep,
                            const StatsPolicy& policy = {});

InGameStats per_game_stats(const EvalSeries& series, sgf::Color player, const GmPolicy& gm = {},
                           const UrPolicy& ur = {}, const StatsPolicy& stats = {});

// ---- contextual

// One earlier game seen from one player's side.
struct PlayedGame {
  Date date;
  std::string game_id;
  std::string opponent_id;
  catalog::Region opponent_region = catalog::Region::Unknown;
  std::optional<int> opponent_rank;
  std::optional<double> opponent_age;
  std::string tournament_category;
  double score = 0.0;  // 1 win, 0.5 draw, 0 loss
  bool cross_region = false;
};

struct WinFraction {
  double value = 0.5;
  int count = 0;
  bool operator==(const WinFraction&) const = default;
};

struct ContextWindows {
  int short_window = 10;
  int long_window = 20;
};

struct ContextFeatures {
  WinFraction mr_short, mr_long, mrr, mur, tr;
  double opp_rank = kMissing;
  double opp_age = kMissing;
  int crc = 0;
};

// `history` must hold only games dated strictly before `asof`, oldest first;
// anything later throws std::invalid_argument.
ContextFeatures contextual_features(const catalog::PlayerProfile& player, const Date& asof,
                                    std::span<const PlayedGame> history, const catalog::PlayerProfile& opponent,
                                    const catalog::TournamentInfo& tournament, const ContextWindows& windows = {});

// ---- assembly

enum class Group { Meta, Contextual, InGame };
const char* to_string(Group g);

struct Column {
  std::string name;
  Group group;
  bool nullable = false;  // followed by a `<name>_present` column
};

// Fixed column order shared by every FeatureVector, present-flag columns included.
const std::vector<Column>& schema();
const std::vector<std::string>& column_names();
std::size_t column_index(std::string_view name);

// Means over a player's recent analyzed games; NaN when no game defines the field.
struct InGameAverages {
  int games = 0;
  double gm_ratio = kMissing, ur_count = kMissing, mwr = kMissing, ms = kMissing, mlwr = kMissing, mls = kMissing,
         ar = kMissing, sar = kMissing, cr = kMissing, cr_opening = kMissing;
};

InGameAverages average_stats(std::span<const InGameStats> recent);

struct SideInputs {
  catalog::PlayerProfile profile;
  std::optional<double> age;
  std::optional<rating::RatingPoint> whr;  // nullopt when never rated before the checkpoint
  ContextFeatures context;
  std::optional<InGameAverages> ingame;
};

struct FeatureInputs {
  std::string game_id;
  Date date;
  std::optional<double> komi;
  catalog::TournamentInfo tournament;
  catalog::RegionPair category = catalog::RegionPair::Others;
  std::optional<int> label;  // 1 = black won
  SideInputs black;
  SideInputs white;
};

struct FeatureVector {
  std::string game_id;
  Date date;
  int label = 0;
  catalog::RegionPair category = catalog::RegionPair::Others;
  std::vector<double> values;  // schema() order, NaN = missing

  bool operator==(const FeatureVector& o) const;
};

FeatureVector assemble_feature_vector(const FeatureInputs& in);

// ---- corpus level

struct FeatureConfig {
  GmPolicy gm;
  UrPolicy ur;
  StatsPolicy stats;
  ContextWindows windows;
  int ingame_recent = 10;
  rating::WhrParams whr;
  // History used for games on or after this date is frozen here.
  std::optional<Date> freeze_at;
};

// Kept games only; draws and unknown winners produce no row but still feed
// history. Output order follows (date, game_id).
std::vector<FeatureVector> build_features(std::span<const catalog::CatalogedGame> games,
                                          const std::map<std::string, engine::AnalyzedGame>& analyzed,
                                          const FeatureConfig& config, int workers = 1);

CsvTable features_to_csv(std::span<const FeatureVector> rows);
std::vector<FeatureVector> features_from_csv(const CsvTable& table);
CsvTable schema_to_csv();

}  // namespace gostat::features
