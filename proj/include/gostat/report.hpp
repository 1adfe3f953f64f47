#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gostat/catalog.hpp"
#include "gostat/csv.hpp"
#include "gostat/engine.hpp"
#include "gostat/features.hpp"
#include "gostat/rating.hpp"

namespace gostat::report {

using Analyses = std::map<std::string, engine::AnalyzedGame>;

// Keyed numeric table. NaN cells are blanks (written empty); infinities are rejected.
struct ReportTable {
  std::string title;
  std::string key_name;
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::string note;

  void validate() const;  // std::logic_error on duplicate keys, ragged rows or infinite cells
  const std::vector<double>& row(std::string_view key) const;
  double cell(std::string_view key, std::string_view column) const;
  CsvTable to_csv() const;
};

// Kept games only throughout. Draws and unknown results get their own columns.
ReportTable black_winrate_by_komi(std::span<const catalog::CatalogedGame> games, const Analyses* analyzed = nullptr);

enum class Dimension { Year, TournamentKind, Round, Gender, RegionPair, Player, Matchup, TournamentCategory };
const char* to_string(Dimension d);
Dimension parse_dimension(std::string_view s);  // std::invalid_argument on anything else

// Count descending, ties by key. Player rows count appearances (two per game);
// Matchup keys are "a|b" with a < b and carry a's wins and b's wins.
ReportTable counts_by(std::span<const catalog::CatalogedGame> games, Dimension dim,
                      std::optional<std::size_t> top_n = std::nullopt);

enum class Phase { Opening, NonOpening, All };
const char* to_string(Phase p);
Phase parse_phase(std::string_view s);

// Moves matching the engine's top-k choice over all moves of the phase in a
// year, both colors pooled.
ReportTable coincidence_by_year(std::span<const catalog::CatalogedGame> games, const Analyses& analyzed, Phase phase,
                                int opening_len = 50, int top_k = 1);

enum class LossStat { Mlwr, Mls };
const char* to_string(LossStat s);
LossStat parse_loss_stat(std::string_view s);

// Players bucketed by rating quantiles over all (player, game) samples;
// empty buckets are omitted.
ReportTable loss_by_whr_bucket(std::span<const catalog::CatalogedGame> games, const Analyses& analyzed,
                               const rating::RatingHistory& ratings, int buckets, LossStat stat,
                               const features::GmPolicy& gm = {}, const features::UrPolicy& ur = {});

// Histogram of move counts in [lo, lo + width) bins.
ReportTable length_distribution(std::span<const catalog::CatalogedGame> games, int bin_width = 10,
                                bool by_result_kind = false);
// Games and mean length per result kind.
ReportTable length_summary(std::span<const catalog::CatalogedGame> games);

// Player ages at game time (5-year buckets) per decade of play; counts appearances.
ReportTable age_by_generation(std::span<const catalog::CatalogedGame> games);

}  // namespace gostat::report
