#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gostat/csv.hpp"
#include "gostat/date.hpp"
#include "gostat/sgf.hpp"

namespace gostat::catalog {

enum class Gender { Male, Female, Unknown };
enum class Region { CHN, KOR, JPN, TWN, Other, Unknown };
// Region bucket of a game: CR when the two players' regions differ.
enum class RegionPair { CR, CHN, KOR, JPN, Others };
inline constexpr std::array<RegionPair, 5> kRegionPairs = {RegionPair::CR, RegionPair::CHN, RegionPair::KOR,
                                                           RegionPair::JPN, RegionPair::Others};

enum class RegionScope { International, NonInternational, Unknown };
enum class Importance { WorldMajor, RegionalMajor, Other, Unknown };
enum class TournamentKind { Elimination, League, Team, Friendly, Unknown };

const char* to_string(Gender g);
const char* to_string(Region r);
const char* to_string(RegionPair r);
const char* to_string(RegionScope r);
const char* to_string(Importance i);
const char* to_string(TournamentKind k);
Gender parse_gender(std::string_view s);
Region parse_region(std::string_view s);
std::optional<RegionPair> parse_region_pair(std::string_view s);
RegionScope parse_region_scope(std::string_view s);
Importance parse_importance(std::string_view s);
TournamentKind parse_tournament_kind(std::string_view s);

struct PlayerProfile {
  std::string player_id;
  std::string canonical_name;
  std::optional<Date> birth_date;
  Gender gender = Gender::Unknown;
  Region region = Region::Unknown;
  std::optional<int> rank;  // 1..9 dan
  bool matched = true;      // false for names absent from the player table
};

struct TournamentInfo {
  std::string category;
  std::string edition;
  RegionScope region_scope = RegionScope::Unknown;
  Importance importance = Importance::Unknown;
  TournamentKind kind = TournamentKind::Unknown;
  std::string round_label;
  bool matched = true;
};

enum class ExclusionReason { Duplicate, NonstandardBoard, Handicap, Blocklisted, Abnormal, NoDate };
const char* to_string(ExclusionReason r);
std::optional<ExclusionReason> parse_exclusion_reason(std::string_view s);

struct CatalogedGame {
  sgf::GameRecord game;
  PlayerProfile black;
  PlayerProfile white;
  TournamentInfo tournament;
  std::optional<ExclusionReason> excluded;  // empty = kept
  RegionPair region_pair = RegionPair::Others;

  bool kept() const { return !excluded.has_value(); }
  const Date& date() const { return *game.date; }
  const PlayerProfile& side(sgf::Color c) const { return c == sgf::Color::Black ? black : white; }
  // 1 black, 0 white, 0.5 draw, nullopt unknown.
  std::optional<double> black_score() const;
};

struct CleaningRules {
  bool exclude_handicap = true;
  bool exclude_nonstandard_board = true;
  bool exclude_dateless = true;
  std::vector<std::string> event_blocklist;  // case-insensitive substrings
  std::set<sgf::ResultKind> abnormal_results = {sgf::ResultKind::Forfeit, sgf::ResultKind::Timeout,
                                                sgf::ResultKind::Unknown};

  bool blocklisted(std::string_view event) const;
  std::string serialize() const;
  static CleaningRules parse(std::string_view text);
};

// One pattern per line; blank lines and '#' comments are skipped.
std::vector<std::string> parse_blocklist(std::string_view text);

// Lowercase, trimmed, internal whitespace collapsed.
std::string normalize_name(std::string_view name);

class PlayerTable {
 public:
  void add(PlayerProfile profile);
  // Exact player_id first, then a unique canonical_name. Ambiguous names do
  // not resolve.
  const PlayerProfile* find(std::string_view sgf_name) const;
  // find() or an all-Unknown profile keyed "?<normalized name>".
  PlayerProfile resolve(std::string_view sgf_name) const;
  const std::vector<PlayerProfile>& profiles() const { return profiles_; }
  const PlayerProfile* by_id(std::string_view id) const;

  static PlayerTable from_csv(const CsvTable& table);
  CsvTable to_csv() const;

 private:
  std::vector<PlayerProfile> profiles_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_name_;
};

class TournamentTable {
 public:
  void add(TournamentInfo info);
  // Exact edition, then exact category, then the longest category that
  // occurs inside the event text.
  TournamentInfo resolve(std::string_view event, std::string_view round) const;
  const std::vector<TournamentInfo>& rows() const { return rows_; }

  static TournamentTable from_csv(const CsvTable& table);
  CsvTable to_csv() const;

 private:
  std::vector<TournamentInfo> rows_;
};

RegionPair region_pair(Region black, Region white);

// Every record comes back exactly once. Later copies of a game_id are
// Excluded(duplicate).
std::vector<CatalogedGame> ingest(std::span<const sgf::GameRecord> records, const PlayerTable& players,
                                  const TournamentTable& tournaments, const CleaningRules& rules,
                                  std::vector<std::string>* log = nullptr);

struct RegionSummary {
  long total = 0, cr = 0, chn = 0, kor = 0, jpn = 0, others = 0;
  long& bucket(RegionPair p);
  bool operator==(const RegionSummary&) const = default;
};

RegionSummary summarize_regions(std::span<const CatalogedGame> games);

// Fractional years since birth (days / 365.25). Unknown birth date, or a
// date before birth (data_error set), yields nullopt.
std::optional<double> age_at(const PlayerProfile& profile, const Date& on, bool* data_error = nullptr);

CsvTable games_to_csv(std::span<const CatalogedGame> games);

}  // namespace gostat::catalog
