#include "gostat/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace gostat::catalog {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename Enum, std::size_t N>
Enum parse_label(std::string_view s, const std::array<std::pair<const char*, Enum>, N>& table, Enum fallback) {
  std::string key = lower(trim(s));
  for (const auto& [name, value] : table)
    if (lower(name) == key) return value;
  return fallback;
}

const std::array<std::pair<const char*, Gender>, 4> kGenders = {
    {{"Male", Gender::Male}, {"M", Gender::Male}, {"Female", Gender::Female}, {"F", Gender::Female}}};
const std::array<std::pair<const char*, Region>, 9> kRegions = {{{"CHN", Region::CHN},
                                                                  {"China", Region::CHN},
                                                                  {"KOR", Region::KOR},
                                                                  {"Korea", Region::KOR},
                                                                  {"JPN", Region::JPN},
                                                                  {"Japan", Region::JPN},
                                                                  {"TWN", Region::TWN},
                                                                  {"Taiwan", Region::TWN},
                                                                  {"Other", Region::Other}}};
const std::array<std::pair<const char*, RegionScope>, 2> kScopes = {
    {{"International", RegionScope::International}, {"NonInternational", RegionScope::NonInternational}}};
const std::array<std::pair<const char*, Importance>, 3> kImportance = {{{"WorldMajor", Importance::WorldMajor},
                                                                        {"RegionalMajor", Importance::RegionalMajor},
                                                                        {"Other", Importance::Other}}};
const std::array<std::pair<const char*, TournamentKind>, 4> kKinds = {{{"Elimination", TournamentKind::Elimination},
                                                                       {"League", TournamentKind::League},
                                                                       {"Team", TournamentKind::Team},
                                                                       {"Friendly", TournamentKind::Friendly}}};

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  return lower(haystack).find(lower(needle)) != std::string::npos;
}

}  // namespace

const char* to_string(Gender g) {
  switch (g) {
    case Gender::Male: return "Male";
    case Gender::Female: return "Female";
    default: return "Unknown";
  }
}
const char* to_string(Region r) {
  switch (r) {
    case Region::CHN: return "CHN";
    case Region::KOR: return "KOR";
    case Region::JPN: return "JPN";
    case Region::TWN: return "TWN";
    case Region::Other: return "Other";
    default: return "Unknown";
  }
}
const char* to_string(RegionPair r) {
  switch (r) {
    case RegionPair::CR: return "CR";
    case RegionPair::CHN: return "CHN";
    case RegionPair::KOR: return "KOR";
    case RegionPair::JPN: return "JPN";
    default: return "Others";
  }
}
const char* to_string(RegionScope r) {
  switch (r) {
    case RegionScope::International: return "International";
    case RegionScope::NonInternational: return "NonInternational";
    default: return "Unknown";
  }
}
const char* to_string(Importance i) {
  switch (i) {
    case Importance::WorldMajor: return "WorldMajor";
    case Importance::RegionalMajor: return "RegionalMajor";
    case Importance::Other: return "Other";
    default: return "Unknown";
  }
}
const char* to_string(TournamentKind k) {
  switch (k) {
    case TournamentKind::Elimination: return "Elimination";
    case TournamentKind::League: return "League";
    case TournamentKind::Team: return "Team";
    case TournamentKind::Friendly: return "Friendly";
    default: return "Unknown";
  }
}
const char* to_string(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::Duplicate: return "duplicate";
    case ExclusionReason::NonstandardBoard: return "nonstandard-board";
    case ExclusionReason::Handicap: return "handicap";
    case ExclusionReason::Blocklisted: return "blocklist";
    case ExclusionReason::Abnormal: return "abnormal";
    case ExclusionReason::NoDate: return "no-date";
  }
  return "";
}

Gender parse_gender(std::string_view s) { return parse_label(s, kGenders, Gender::Unknown); }
Region parse_region(std::string_view s) {
  if (trim(s).empty() || lower(trim(s)) == "unknown") return Region::Unknown;
  return parse_label(s, kRegions, Region::Other);
}
std::optional<RegionPair> parse_region_pair(std::string_view s) {
  for (RegionPair p : kRegionPairs)
    if (s == to_string(p)) return p;
  return std::nullopt;
}
RegionScope parse_region_scope(std::string_view s) { return parse_label(s, kScopes, RegionScope::Unknown); }
Importance parse_importance(std::string_view s) { return parse_label(s, kImportance, Importance::Unknown); }
TournamentKind parse_tournament_kind(std::string_view s) { return parse_label(s, kKinds, TournamentKind::Unknown); }
std::optional<ExclusionReason> parse_exclusion_reason(std::string_view s) {
  for (auto r : {ExclusionReason::Duplicate, ExclusionReason::NonstandardBoard, ExclusionReason::Handicap,
                 ExclusionReason::Blocklisted, ExclusionReason::Abnormal, ExclusionReason::NoDate})
    if (s == to_string(r)) return r;
  return std::nullopt;
}

std::optional<double> CatalogedGame::black_score() const {
  const auto& r = game.result;
  if (r.kind == sgf::ResultKind::Draw) return 0.5;
  if (!r.winner) return std::nullopt;
  return *r.winner == sgf::Color::Black ? 1.0 : 0.0;
}

// ---------------------------------------------------------------- rules

bool CleaningRules::blocklisted(std::string_view event) const {
  return std::any_of(event_blocklist.begin(), event_blocklist.end(),
                     [&](const std::string& pattern) { return contains_ci(event, pattern); });
}

std::string CleaningRules::serialize() const {
  std::ostringstream out;
  out << "exclude_handicap=" << (exclude_handicap ? "true" : "false") << '\n';
  out << "exclude_nonstandard_board=" << (exclude_nonstandard_board ? "true" : "false") << '\n';
  out << "exclude_dateless=" << (exclude_dateless ? "true" : "false") << '\n';
  out << "abnormal_results=";
  bool first = true;
  for (auto k : abnormal_results) {
    out << (first ? "" : ",") << sgf::result_kind_name(k);
    first = false;
  }
  out << '\n';
  for (const auto& p : event_blocklist) out << "blocklist=" << p << '\n';
  return out.str();
}

CleaningRules CleaningRules::parse(std::string_view text) {
  CleaningRules rules;
  rules.abnormal_results.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  auto flag = [](std::string_view v) {
    std::string l = lower(trim(v));
    if (l == "true" || l == "1" || l == "yes") return true;
    if (l == "false" || l == "0" || l == "no") return false;
    throw std::runtime_error("rules: bad boolean '" + std::string(v) + "'");
  };
  while (std::getline(in, line)) {
    std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    auto eq = l.find('=');
    if (eq == std::string_view::npos) throw std::runtime_error("rules: expected key=value: " + std::string(l));
    std::string_view key = trim(l.substr(0, eq));
    std::string_view value = l.substr(eq + 1);
    if (key == "exclude_handicap") rules.exclude_handicap = flag(value);
    else if (key == "exclude_nonstandard_board") rules.exclude_nonstandard_board = flag(value);
    else if (key == "exclude_dateless") rules.exclude_dateless = flag(value);
    else if (key == "blocklist") rules.event_blocklist.emplace_back(trim(value));
    else if (key == "abnormal_results") {
      std::string v(value);
      std::istringstream parts(v);
      std::string part;
      while (std::getline(parts, part, ',')) {
        std::string p = lower(trim(part));
        if (p.empty()) continue;
        bool found = false;
        for (auto k : {sgf::ResultKind::PointsWin, sgf::ResultKind::Resignation, sgf::ResultKind::Forfeit,
                       sgf::ResultKind::Timeout, sgf::ResultKind::WinUnspecified, sgf::ResultKind::Draw,
                       sgf::ResultKind::Unknown}) {
          if (p == sgf::result_kind_name(k)) {
            rules.abnormal_results.insert(k);
            found = true;
          }
        }
        if (!found) throw std::runtime_error("rules: unknown result kind '" + p + "'");
      }
    } else {
      throw std::runtime_error("rules: unknown key '" + std::string(key) + "'");
    }
  }
  return rules;
}

std::vector<std::string> parse_blocklist(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    out.emplace_back(l);
  }
  return out;
}

std::string normalize_name(std::string_view name) {
  std::string out;
  bool space = false;
  for (char c : trim(name)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

// ---------------------------------------------------------------- players

void PlayerTable::add(PlayerProfile profile) {
  std::string id_key = normalize_name(profile.player_id);
  if (id_key.empty()) throw std::runtime_error("players: empty player_id");
  if (by_id_.contains(id_key)) throw std::runtime_error("players: duplicate player_id '" + profile.player_id + "'");
  if (profile.rank && (*profile.rank < 1 || *profile.rank > 9))
    throw std::runtime_error("players: rank outside 1-9 for '" + profile.player_id + "'");
  std::size_t idx = profiles_.size();
  by_id_[id_key] = idx;
  by_name_[normalize_name(profile.canonical_name)].push_back(idx);
  profiles_.push_back(std::move(profile));
}

const PlayerProfile* PlayerTable::by_id(std::string_view id) const {
  auto it = by_id_.find(normalize_name(id));
  return it == by_id_.end() ? nullptr : &profiles_[it->second];
}

const PlayerProfile* PlayerTable::find(std::string_view sgf_name) const {
  std::string key = normalize_name(sgf_name);
  if (key.empty()) return nullptr;
  if (auto it = by_id_.find(key); it != by_id_.end()) return &profiles_[it->second];
  if (auto it = by_name_.find(key); it != by_name_.end() && it->second.size() == 1)
    return &profiles_[it->second.front()];
  return nullptr;
}

PlayerProfile PlayerTable::resolve(std::string_view sgf_name) const {
  if (const auto* p = find(sgf_name)) return *p;
  PlayerProfile unknown;
  unknown.player_id = "?" + normalize_name(sgf_name);
  unknown.canonical_name = std::string(trim(sgf_name));
  unknown.matched = false;
  return unknown;
}

PlayerTable PlayerTable::from_csv(const CsvTable& t) {
  auto id = t.require_column("player_id");
  auto name = t.require_column("canonical_name");
  auto birth = t.require_column("birth_date");
  auto gender = t.require_column("gender");
  auto region = t.require_column("region");
  auto rank = t.require_column("rank");
  PlayerTable table;
  for (const auto& row : t.rows) {
    PlayerProfile p;
    p.player_id = row[id];
    p.canonical_name = row[name];
    if (!trim(row[birth]).empty() && lower(trim(row[birth])) != "unknown") {
      p.birth_date = Date::parse(row[birth]);
      if (!p.birth_date) throw std::runtime_error("players: bad birth_date '" + row[birth] + "'");
    }
    p.gender = parse_gender(row[gender]);
    p.region = parse_region(row[region]);
    std::string_view r = trim(row[rank]);
    if (!r.empty() && lower(r) != "unknown") {
      int v = 0;
      auto [ptr, ec] = std::from_chars(r.data(), r.data() + r.size(), v);
      if (ec != std::errc() || ptr != r.data() + r.size())
        throw std::runtime_error("players: bad rank '" + row[rank] + "'");
      p.rank = v;
    }
    table.add(std::move(p));
  }
  return table;
}

CsvTable PlayerTable::to_csv() const {
  CsvTable t;
  t.header = {"player_id", "canonical_name", "birth_date", "gender", "region", "rank"};
  for (const auto& p : profiles_) {
    t.rows.push_back({p.player_id, p.canonical_name, p.birth_date ? p.birth_date->to_string() : "",
                      to_string(p.gender), p.region == Region::Unknown ? "" : to_string(p.region),
                      p.rank ? std::to_string(*p.rank) : ""});
  }
  return t;
}

// ---------------------------------------------------------------- tournaments

void TournamentTable::add(TournamentInfo info) { rows_.push_back(std::move(info)); }

TournamentInfo TournamentTable::resolve(std::string_view event, std::string_view round) const {
  std::string key = normalize_name(event);
  const TournamentInfo* hit = nullptr;
  if (!key.empty()) {
    for (const auto& t : rows_)
      if (normalize_name(t.edition) == key) { hit = &t; break; }
    if (!hit)
      for (const auto& t : rows_)
        if (normalize_name(t.category) == key) { hit = &t; break; }
    if (!hit) {
      std::size_t best = 0;
      for (const auto& t : rows_) {
        std::string cat = normalize_name(t.category);
        if (cat.size() > best && key.find(cat) != std::string::npos) {
          best = cat.size();
          hit = &t;
        }
      }
    }
  }
  TournamentInfo info;
  if (hit) {
    info = *hit;
    if (normalize_name(info.edition) != key) info.edition = std::string(trim(event));
  } else {
    info.category = std::string(trim(event));
    info.edition = info.category;
    info.matched = false;
  }
  info.round_label = std::string(trim(round));
  return info;
}

TournamentTable TournamentTable::from_csv(const CsvTable& t) {
  auto category = t.require_column("category");
  auto edition = t.require_column("edition");
  auto scope = t.require_column("region_scope");
  auto importance = t.require_column("importance");
  auto kind = t.require_column("kind");
  TournamentTable table;
  for (const auto& row : t.rows) {
    TournamentInfo info;
    info.category = row[category];
    info.edition = row[edition];
    info.region_scope = parse_region_scope(row[scope]);
    info.importance = parse_importance(row[importance]);
    info.kind = parse_tournament_kind(row[kind]);
    if (info.kind == TournamentKind::Unknown)
      throw std::runtime_error("tournaments: kind must be Elimination, League, Team or Friendly, got '" +
                               row[kind] + "'");
    table.add(std::move(info));
  }
  return table;
}

CsvTable TournamentTable::to_csv() const {
  CsvTable t;
  t.header = {"category", "edition", "region_scope", "importance", "kind"};
  for (const auto& r : rows_)
    t.rows.push_back({r.category, r.edition, to_string(r.region_scope), to_string(r.importance), to_string(r.kind)});
  return t;
}

// ---------------------------------------------------------------- ingest

RegionPair region_pair(Region black, Region white) {
  if (black != white) return RegionPair::CR;
  switch (black) {
    case Region::CHN: return RegionPair::CHN;
    case Region::KOR: return RegionPair::KOR;
    case Region::JPN: return RegionPair::JPN;
    default: return RegionPair::Others;
  }
}

std::vector<CatalogedGame> ingest(std::span<const sgf::GameRecord> records, const PlayerTable& players,
                                  const TournamentTable& tournaments, const CleaningRules& rules,
                                  std::vector<std::string>* log) {
  std::vector<CatalogedGame> out;
  out.reserve(records.size());
  std::unordered_set<std::string> seen;
  for (const auto& rec : records) {
    CatalogedGame g;
    g.game = rec;
    g.black = players.resolve(rec.black_name);
    g.white = players.resolve(rec.white_name);
    g.tournament = tournaments.resolve(rec.event, rec.round);
    g.region_pair = region_pair(g.black.region, g.white.region);

    if (!seen.insert(rec.game_id).second) {
      g.excluded = ExclusionReason::Duplicate;
      if (log) log->push_back("duplicate game_id " + rec.game_id + " dropped (first copy kept)");
    } else if (rules.exclude_nonstandard_board && rec.nonstandard_board()) {
      g.excluded = ExclusionReason::NonstandardBoard;
    } else if (rules.exclude_handicap && (rec.handicap > 0 || rec.has_setup_stones())) {
      g.excluded = ExclusionReason::Handicap;
    } else if (rules.blocklisted(rec.event)) {
      g.excluded = ExclusionReason::Blocklisted;
    } else if (rules.abnormal_results.contains(rec.result.kind)) {
      g.excluded = ExclusionReason::Abnormal;
    } else if (rules.exclude_dateless && !rec.date) {
      g.excluded = ExclusionReason::NoDate;
    }
    out.push_back(std::move(g));
  }
  return out;
}

long& RegionSummary::bucket(RegionPair p) {
  switch (p) {
    case RegionPair::CR: return cr;
    case RegionPair::CHN: return chn;
    case RegionPair::KOR: return kor;
    case RegionPair::JPN: return jpn;
    default: return others;
  }
}

RegionSummary summarize_regions(std::span<const CatalogedGame> games) {
  RegionSummary s;
  for (const auto& g : games) {
    if (!g.kept()) continue;
    ++s.total;
    ++s.bucket(g.region_pair);
  }
  return s;
}

std::optional<double> age_at(const PlayerProfile& profile, const Date& on, bool* data_error) {
  if (data_error) *data_error = false;
  if (!profile.birth_date) return std::nullopt;
  int days = days_between(*profile.birth_date, on);
  if (days < 0) {
    if (data_error) *data_error = true;
    return std::nullopt;
  }
  return days / 365.25;
}

CsvTable games_to_csv(std::span<const CatalogedGame> games) {
  CsvTable t;
  t.header = {"game_id", "black_id", "white_id", "date", "komi", "result", "verdict", "reason", "region_pair"};
  for (const auto& g : games) {
    t.rows.push_back({g.game.game_id, g.black.player_id, g.white.player_id,
                      g.game.date ? g.game.date->to_string() : "",
                      g.game.komi ? format_shortest(*g.game.komi) : "", g.game.result.to_sgf(),
                      g.kept() ? "kept" : "excluded", g.excluded ? to_string(*g.excluded) : "",
                      to_string(g.region_pair)});
  }
  return t;
}

}  // namespace gostat::catalog
