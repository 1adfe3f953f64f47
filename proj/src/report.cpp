#include "gostat/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace gostat::report {

using catalog::CatalogedGame;

namespace {

constexpr double kBlank = std::numeric_limits<double>::quiet_NaN();

double ratio(double num, double den) { return den > 0 ? num / den : kBlank; }

std::vector<const CatalogedGame*> kept(std::span<const CatalogedGame> games) {
  std::vector<const CatalogedGame*> out;
  for (const auto& g : games)
    if (g.kept()) out.push_back(&g);
  return out;
}

std::string or_unknown(const std::string& s) { return s.empty() ? "unknown" : s; }

}  // namespace

void ReportTable::validate() const {
  std::set<std::string> keys;
  for (const auto& [k, v] : rows) {
    if (!keys.insert(k).second) throw std::logic_error(title + ": duplicate row key " + k);
    if (v.size() != columns.size()) throw std::logic_error(title + ": ragged row " + k);
    for (double x : v)
      if (std::isinf(x)) throw std::logic_error(title + ": infinite cell in row " + k);
  }
}

const std::vector<double>& ReportTable::row(std::string_view key) const {
  for (const auto& [k, v] : rows)
    if (k == key) return v;
  throw std::out_of_range(title + ": no row " + std::string(key));
}

double ReportTable::cell(std::string_view key, std::string_view column) const {
  auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw std::out_of_range(title + ": no column " + std::string(column));
  return row(key)[static_cast<std::size_t>(it - columns.begin())];
}

CsvTable ReportTable::to_csv() const {
  validate();
  CsvTable t;
  t.header.push_back(key_name);
  t.header.insert(t.header.end(), columns.begin(), columns.end());
  for (const auto& [k, v] : rows) {
    std::vector<std::string> line{k};
    for (double x : v) line.push_back(std::isnan(x) ? "" : format_shortest(x));
    t.rows.push_back(std::move(line));
  }
  return t;
}

// ---------------------------------------------------------------- komi

ReportTable black_winrate_by_komi(std::span<const CatalogedGame> games, const Analyses* analyzed) {
  struct Acc {
    double games = 0, black = 0, white = 0, draws = 0, unknown = 0, analyzed = 0, engine = 0;
  };
  std::map<std::optional<double>, Acc> by;
  std::set<int> visits;
  for (const auto* g : kept(games)) {
    auto& a = by[g->game.komi];
    a.games += 1;
    const auto& r = g->game.result;
    if (r.kind == sgf::ResultKind::Draw) a.draws += 1;
    else if (!r.winner) a.unknown += 1;
    else if (*r.winner == sgf::Color::Black) a.black += 1;
    else a.white += 1;
    if (!analyzed) continue;
    auto it = analyzed->find(g->game.game_id);
    if (it == analyzed->end() || it->second.evals.empty()) continue;
    a.analyzed += 1;
    a.engine += it->second.evals[0].winrate_black;
    visits.insert(it->second.evals[0].visits_used);
  }
  ReportTable t;
  t.title = "black win rate by komi";
  t.key_name = "komi";
  t.columns = {"games", "black_wins", "white_wins", "draws", "unknown", "bwr"};
  if (analyzed) {
    t.columns.push_back("analyzed_games");
    t.columns.push_back("engine_bwr");
    std::string v;
    for (int x : visits) v += (v.empty() ? "" : "/") + std::to_string(x);
    t.note = "engine_bwr = mean empty-board black winrate at " + (v.empty() ? std::string("-") : v) + " visits";
  }
  // missing komi sorts first in the map; list it last
  std::vector<std::pair<std::string, std::vector<double>>> none;
  for (const auto& [k, a] : by) {
    std::vector<double> v{a.games, a.black, a.white, a.draws, a.unknown, ratio(a.black, a.black + a.white)};
    if (analyzed) {
      v.push_back(a.analyzed);
      v.push_back(ratio(a.engine, a.analyzed));
    }
    if (k) t.rows.emplace_back(format_shortest(*k), std::move(v));
    else none.emplace_back("none", std::move(v));
  }
  for (auto& r : none) t.rows.push_back(std::move(r));
  return t;
}

// ---------------------------------------------------------------- counts

const char* to_string(Dimension d) {
  switch (d) {
    case Dimension::Year: return "year";
    case Dimension::TournamentKind: return "tournament_kind";
    case Dimension::Round: return "round";
    case Dimension::Gender: return "gender";
    case Dimension::RegionPair: return "region_pair";
    case Dimension::Player: return "player";
    case Dimension::Matchup: return "matchup";
    case Dimension::TournamentCategory: return "tournament";
  }
  return "?";
}

Dimension parse_dimension(std::string_view s) {
  for (auto d : {Dimension::Year, Dimension::TournamentKind, Dimension::Round, Dimension::Gender, Dimension::RegionPair,
                 Dimension::Player, Dimension::Matchup, Dimension::TournamentCategory})
    if (s == to_string(d)) return d;
  throw std::invalid_argument("unsupported dimension '" + std::string(s) + "'");
}

ReportTable counts_by(std::span<const CatalogedGame> games, Dimension dim, std::optional<std::size_t> top_n) {
  ReportTable t;
  t.title = std::string("counts by ") + to_string(dim);
  t.key_name = to_string(dim);
  std::map<std::string, std::vector<double>> acc;
  auto score = [](const CatalogedGame& g) { return g.black_score(); };

  if (dim == Dimension::Player) {
    t.columns = {"games", "wins", "losses", "draws"};
    t.note = "appearances: every game counts once for each player";
    for (const auto* g : kept(games)) {
      auto s = score(*g);
      for (int side = 0; side < 2; ++side) {
        auto& v = acc[side == 0 ? g->black.player_id : g->white.player_id];
        v.resize(4, 0.0);
        v[0] += 1;
        if (!s) continue;
        double mine = side == 0 ? *s : 1.0 - *s;
        if (mine == 1.0) v[1] += 1;
        else if (mine == 0.0) v[2] += 1;
        else v[3] += 1;
      }
    }
  } else if (dim == Dimension::Matchup) {
    t.columns = {"games", "first_wins", "second_wins", "draws"};
    t.note = "key first|second with first < second";
    for (const auto* g : kept(games)) {
      const auto& b = g->black.player_id;
      const auto& w = g->white.player_id;
      bool black_first = b < w;
      auto& v = acc[black_first ? b + "|" + w : w + "|" + b];
      v.resize(4, 0.0);
      v[0] += 1;
      auto s = score(*g);
      if (!s) continue;
      double first = black_first ? *s : 1.0 - *s;
      if (first == 1.0) v[1] += 1;
      else if (first == 0.0) v[2] += 1;
      else v[3] += 1;
    }
  } else {
    t.columns = {"games"};
    for (const auto* g : kept(games)) {
      std::string key;
      switch (dim) {
        case Dimension::Year: key = std::to_string(g->date().year()); break;
        case Dimension::TournamentKind: key = catalog::to_string(g->tournament.kind); break;
        case Dimension::Round: key = or_unknown(g->tournament.round_label); break;
        case Dimension::Gender: {
          std::string a = catalog::to_string(g->black.gender), b = catalog::to_string(g->white.gender);
          key = a < b ? a + "-" + b : b + "-" + a;
          break;
        }
        case Dimension::RegionPair: key = catalog::to_string(g->region_pair); break;
        case Dimension::TournamentCategory: key = or_unknown(g->tournament.category); break;
        default: break;
      }
      auto& v = acc[key];
      v.resize(1, 0.0);
      v[0] += 1;
    }
  }
  for (auto& [k, v] : acc) t.rows.emplace_back(k, std::move(v));
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) { return a.second[0] > b.second[0]; });
  if (top_n && t.rows.size() > *top_n) t.rows.resize(*top_n);
  return t;
}

// ---------------------------------------------------------------- coincidence

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Opening: return "opening";
    case Phase::NonOpening: return "non_opening";
    case Phase::All: return "all";
  }
  return "?";
}

Phase parse_phase(std::string_view s) {
  for (auto p : {Phase::Opening, Phase::NonOpening, Phase::All})
    if (s == to_string(p)) return p;
  throw std::invalid_argument("unknown phase '" + std::string(s) + "'");
}

ReportTable coincidence_by_year(std::span<const CatalogedGame> games, const Analyses& analyzed, Phase phase,
                                int opening_len, int top_k) {
  if (top_k < 1) throw std::invalid_argument("top_k must be at least 1");
  struct Acc {
    double games = 0, moves = 0, hits = 0;
  };
  std::map<int, Acc> by;
  for (const auto* g : kept(games)) {
    auto it = analyzed.find(g->game.game_id);
    if (it == analyzed.end()) continue;
    const auto& evals = it->second.evals;
    const auto& moves = g->game.moves;
    if (evals.size() != moves.size() + 1) continue;
    auto& a = by[g->date().year()];
    a.games += 1;
    for (std::size_t m = 1; m <= moves.size(); ++m) {
      bool opening = static_cast<int>(m) <= opening_len;
      if ((phase == Phase::Opening && !opening) || (phase == Phase::NonOpening && opening)) continue;
      std::vector<const engine::TopMove*> top;
      for (const auto& x : evals[m - 1].top_moves) top.push_back(&x);
      std::stable_sort(top.begin(), top.end(), [](auto* x, auto* y) { return x->visits > y->visits; });
      bool hit = false;
      for (std::size_t i = 0; i < top.size() && i < static_cast<std::size_t>(top_k); ++i)
        hit = hit || top[i]->point == moves[m - 1].point;
      a.moves += 1;
      a.hits += hit;
    }
  }
  ReportTable t;
  t.title = std::string("coincidence rate by year (") + to_string(phase) + ")";
  t.key_name = "year";
  t.columns = {"games", "moves", "cr"};
  t.note = "moves matching the top-" + std::to_string(top_k) + " engine choice, pooled over both players";
  for (const auto& [y, a] : by) t.rows.emplace_back(std::to_string(y), std::vector<double>{a.games, a.moves, ratio(a.hits, a.moves)});
  return t;
}

// ---------------------------------------------------------------- losses by rating

const char* to_string(LossStat s) { return s == LossStat::Mlwr ? "mlwr" : "mls"; }

LossStat parse_loss_stat(std::string_view s) {
  if (s == "mlwr") return LossStat::Mlwr;
  if (s == "mls") return LossStat::Mls;
  throw std::invalid_argument("unknown loss statistic '" + std::string(s) + "'");
}

ReportTable loss_by_whr_bucket(std::span<const CatalogedGame> games, const Analyses& analyzed,
                               const rating::RatingHistory& ratings, int buckets, LossStat stat,
                               const features::GmPolicy& gm, const features::UrPolicy& ur) {
  if (buckets < 1) throw std::invalid_argument("need at least one bucket");
  struct Sample {
    int year;
    double rating;
    double loss;
  };
  std::vector<Sample> samples;
  for (const auto* g : kept(games)) {
    auto it = analyzed.find(g->game.game_id);
    if (it == analyzed.end() || g->game.moves.empty() || it->second.evals.size() != g->game.moves.size() + 1) continue;
    auto series = features::EvalSeries::from(it->second, &g->game);
    for (auto [color, who] : {std::pair{sgf::Color::Black, &g->black}, std::pair{sgf::Color::White, &g->white}}) {
      if (!rating::has_player(ratings, who->player_id)) continue;
      auto st = features::per_game_stats(series, color, gm, ur);
      double loss = stat == LossStat::Mlwr ? st.mlwr : st.mls;
      if (std::isnan(loss)) continue;
      samples.push_back({g->date().year(), rating::rating_at(ratings, who->player_id, g->date()).rating, loss});
    }
  }
  std::vector<double> sorted;
  for (const auto& s : samples) sorted.push_back(s.rating);
  std::sort(sorted.begin(), sorted.end());
  // inner edges at the 1/b, 2/b, ... quantiles
  std::vector<double> edges;
  for (int b = 1; b < buckets && !sorted.empty(); ++b)
    edges.push_back(sorted[sorted.size() * static_cast<std::size_t>(b) / static_cast<std::size_t>(buckets)]);

  struct Acc {
    double n = 0, sum = 0, lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
  };
  std::map<std::pair<int, int>, Acc> by;
  for (const auto& s : samples) {
    int b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), s.rating) - edges.begin());
    auto& a = by[{s.year, b}];
    a.n += 1;
    a.sum += s.loss;
    a.lo = std::min(a.lo, s.rating);
    a.hi = std::max(a.hi, s.rating);
  }
  ReportTable t;
  t.title = std::string("mean ") + to_string(stat) + " by rating bucket";
  t.key_name = "year_bucket";
  t.columns = {"year", "bucket", "min_rating", "max_rating", "samples", to_string(stat)};
  t.note = "bucket 1 = lowest of " + std::to_string(buckets) + " rating quantiles; ratings at the game date";
  for (const auto& [k, a] : by)
    t.rows.emplace_back(std::to_string(k.first) + "/" + std::to_string(k.second + 1),
                        std::vector<double>{double(k.first), double(k.second + 1), a.lo, a.hi, a.n, a.sum / a.n});
  return t;
}

// ---------------------------------------------------------------- lengths

ReportTable length_distribution(std::span<const CatalogedGame> games, int bin_width, bool by_result_kind) {
  if (bin_width < 1) throw std::invalid_argument("bin width must be at least 1");
  std::map<long, std::vector<double>> bins;
  std::size_t width = by_result_kind ? 4 : 1;
  for (const auto* g : kept(games)) {
    long n = static_cast<long>(g->game.moves.size());
    long lo = n / bin_width * bin_width;
    auto& v = bins[lo];
    v.resize(width, 0.0);
    v[0] += 1;
    if (!by_result_kind) continue;
    auto k = g->game.result.kind;
    v[k == sgf::ResultKind::PointsWin ? 1 : k == sgf::ResultKind::Resignation ? 2 : 3] += 1;
  }
  ReportTable t;
  t.title = "game length distribution";
  t.key_name = "bin";
  t.columns = {"lo", "hi", "games"};
  if (by_result_kind) t.columns.insert(t.columns.end(), {"points", "resignation", "other"});
  for (auto& [lo, v] : bins) {
    std::vector<double> row{double(lo), double(lo + bin_width)};
    row.insert(row.end(), v.begin(), v.end());
    t.rows.emplace_back("[" + std::to_string(lo) + "," + std::to_string(lo + bin_width) + ")", std::move(row));
  }
  return t;
}

ReportTable length_summary(std::span<const CatalogedGame> games) {
  std::map<std::string, std::pair<double, double>> by;
  for (const auto* g : kept(games)) {
    auto& a = by[sgf::result_kind_name(g->game.result.kind)];
    a.first += 1;
    a.second += static_cast<double>(g->game.moves.size());
  }
  ReportTable t;
  t.title = "game length by result kind";
  t.key_name = "result_kind";
  t.columns = {"games", "mean_moves"};
  for (const auto& [k, a] : by) t.rows.emplace_back(k, std::vector<double>{a.first, a.second / a.first});
  return t;
}

// ---------------------------------------------------------------- ages

ReportTable age_by_generation(std::span<const CatalogedGame> games) {
  // buckets <15, 15-19, ..., 55-59, 60+, unknown
  std::vector<std::string> cols{"under_15"};
  for (int a = 15; a < 60; a += 5) cols.push_back(std::to_string(a) + "_" + std::to_string(a + 4));
  cols.push_back("60_plus");
  cols.push_back("unknown");
  std::map<int, std::vector<double>> by;
  for (const auto* g : kept(games)) {
    int decade = g->date().year() / 10 * 10;
    auto& v = by[decade];
    v.resize(cols.size(), 0.0);
    for (const auto* p : {&g->black, &g->white}) {
      auto age = catalog::age_at(*p, g->date());
      std::size_t col;
      if (!age) col = cols.size() - 1;
      else if (*age < 15) col = 0;
      else if (*age >= 60) col = cols.size() - 2;
      else col = static_cast<std::size_t>((*age - 15) / 5) + 1;
      v[col] += 1;
    }
  }
  ReportTable t;
  t.title = "player age by generation";
  t.key_name = "decade";
  t.columns = cols;
  t.note = "appearances: every game counts once for each player";
  for (auto& [d, v] : by) t.rows.emplace_back(std::to_string(d) + "s", std::move(v));
  return t;
}

}  // namespace gostat::report
