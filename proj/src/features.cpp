#include "gostat/features.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace gostat::features {

using sgf::Color;

// ---------------------------------------------------------------- series

double EvalSeries::winrate_of(Color c, int k) const {
  double w = winrate[static_cast<std::size_t>(k)];
  return c == Color::Black ? w : 1.0 - w;
}

double EvalSeries::score_of(Color c, int k) const {
  double s = score[static_cast<std::size_t>(k)];
  return c == Color::Black ? s : -s;
}

void EvalSeries::validate() const {
  if (winrate.empty()) throw std::invalid_argument("empty evaluation series");
  if (score.size() != winrate.size()) throw std::invalid_argument("winrate and score lengths differ");
  if (movers.size() + 1 != winrate.size()) throw std::invalid_argument("mover list does not match the series");
  if (!played.empty() && played.size() != movers.size()) throw std::invalid_argument("played list does not match");
  if (!top_moves.empty() && top_moves.size() != winrate.size()) throw std::invalid_argument("top-move list does not match");
  for (std::size_t i = 0; i < winrate.size(); ++i)
    if (!std::isfinite(winrate[i]) || !std::isfinite(score[i])) throw std::invalid_argument("non-finite evaluation");
}

EvalSeries EvalSeries::prefix(int last_move) const {
  EvalSeries out;
  auto n = static_cast<std::size_t>(last_move);
  out.winrate.assign(winrate.begin(), winrate.begin() + static_cast<std::ptrdiff_t>(n + 1));
  out.score.assign(score.begin(), score.begin() + static_cast<std::ptrdiff_t>(n + 1));
  if (!top_moves.empty()) out.top_moves.assign(top_moves.begin(), top_moves.begin() + static_cast<std::ptrdiff_t>(n + 1));
  out.movers.assign(movers.begin(), movers.begin() + static_cast<std::ptrdiff_t>(n));
  if (!played.empty()) out.played.assign(played.begin(), played.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

EvalSeries EvalSeries::from(const engine::AnalyzedGame& analyzed, const sgf::GameRecord* record) {
  EvalSeries s;
  for (const auto& e : analyzed.evals) {
    s.winrate.push_back(e.winrate_black);
    s.score.push_back(e.score_black);
    s.top_moves.push_back(e.top_moves);
  }
  if (s.winrate.empty()) throw std::invalid_argument("analysis of " + analyzed.game_id + " has no evaluations");
  std::size_t n = s.winrate.size() - 1;
  if (record) {
    if (record->moves.size() != n)
      throw std::invalid_argument("analysis of " + analyzed.game_id + " covers " + std::to_string(n) +
                                  " moves, record has " + std::to_string(record->moves.size()));
    for (const auto& m : record->moves) {
      s.movers.push_back(m.color);
      s.played.push_back(m.point);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) s.movers.push_back(i % 2 == 0 ? Color::Black : Color::White);
  }
  s.validate();
  return s;
}

EvalSeries EvalSeries::from_values(std::vector<double> winrate, std::vector<double> score) {
  EvalSeries s;
  s.winrate = std::move(winrate);
  s.score = std::move(score);
  for (std::size_t i = 0; i + 1 < s.winrate.size(); ++i) s.movers.push_back(i % 2 == 0 ? Color::Black : Color::White);
  s.validate();
  return s;
}

void GmPolicy::validate() const {
  if (window < 1) throw std::invalid_argument("GM window must be at least 1");
}

void UrPolicy::validate() const {
  if (!(loss_winrate_bar > 0) || !(loss_score_bar > 0) || !(similarity_winrate > 0) || !(similarity_score > 0))
    throw std::invalid_argument("UR thresholds must be positive");
}

// ---------------------------------------------------------------- GM / UR

std::vector<double> trailing_mean(std::span<const double> values, int window) {
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::size_t lo = k + 1 >= static_cast<std::size_t>(window) ? k + 1 - static_cast<std::size_t>(window) : 0;
    double sum = 0;
    for (std::size_t i = lo; i <= k; ++i) sum += values[i];
    out[k] = sum / static_cast<double>(k - lo + 1);
  }
  return out;
}

GmResult detect_garbage_moves(const EvalSeries& series, const GmPolicy& policy) {
  policy.validate();
  series.validate();
  int n = series.moves();
  if (n == 0) return {};
  auto sw = trailing_mean(series.winrate, policy.window);
  auto ss = trailing_mean(series.score, policy.window);
  auto decided = [&](int k) {
    bool black_leads = sw[k] >= 0.5;
    double lead_w = black_leads ? sw[k] : 1.0 - sw[k];
    double lead_s = black_leads ? ss[k] : -ss[k];
    return lead_w > policy.winrate_bar || lead_s > policy.score_bar;
  };
  int x = n + 1;
  while (x - 1 >= 1 && decided(x - 1)) --x;
  if (x == n + 1) return {};
  return GmResult{x, static_cast<double>(n - x + 1) / n};
}

std::vector<int> detect_unstable_rounds(const EvalSeries& series, const UrPolicy& policy) {
  policy.validate();
  series.validate();
  int n = series.moves();
  auto loss_w = [&](int m) { return series.winrate_of(series.mover(m), m - 1) - series.winrate_of(series.mover(m), m); };
  auto loss_s = [&](int m) { return series.score_of(series.mover(m), m - 1) - series.score_of(series.mover(m), m); };
  std::vector<int> out;
  for (int x = 1; x + 1 <= n; ++x) {
    double w1 = loss_w(x), w2 = loss_w(x + 1), s1 = loss_s(x), s2 = loss_s(x + 1);
    bool by_w = w1 > policy.loss_winrate_bar && w2 > policy.loss_winrate_bar &&
                std::abs(w1 - w2) < policy.similarity_winrate;
    bool by_s = s1 > policy.loss_score_bar && s2 > policy.loss_score_bar && std::abs(s1 - s2) < policy.similarity_score;
    if (by_w || by_s) {
      if (out.empty() || out.back() != x) out.push_back(x);
      out.push_back(x + 1);
    }
  }
  return out;
}

std::vector<bool> kept_positions(const EvalSeries& series, const GmPolicy& gm, const UrPolicy& ur, GmResult* gm_out,
                                 std::vector<int>* ur_out, bool* degenerate) {
  int n = series.moves();
  GmResult g = detect_garbage_moves(series, gm);
  std::vector<bool> keep(static_cast<std::size_t>(n + 1), true);
  bool all_garbage = g.start && *g.start == 1;
  std::vector<int> unstable;
  if (all_garbage) {
    unstable = detect_unstable_rounds(series, ur);
  } else {
    int last = g.start ? *g.start - 1 : n;
    unstable = detect_unstable_rounds(series.prefix(last), ur);
    for (int k = last + 1; k <= n; ++k) keep[static_cast<std::size_t>(k)] = false;
    for (int k : unstable) keep[static_cast<std::size_t>(k)] = false;
  }
  if (gm_out) *gm_out = g;
  if (ur_out) *ur_out = unstable;
  if (degenerate) *degenerate = all_garbage;
  return keep;
}

// ---------------------------------------------------------------- stats

namespace {

double mean_or_missing(double sum, int count) { return count > 0 ? sum / count : kMissing; }

bool matches_top_k(const std::vector<engine::TopMove>& top, const std::optional<sgf::Point>& played, int k) {
  std::vector<const engine::TopMove*> order;
  for (const auto& t : top) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->visits > b->visits; });
  for (std::size_t i = 0; i < order.size() && i < static_cast<std::size_t>(k); ++i)
    if (order[i]->point == played) return true;
  return false;
}

}  // namespace

InGameStats stats_from_mask(const EvalSeries& series, Color player, const std::vector<bool>& keep,
                            const StatsPolicy& policy) {
  int n = series.moves();
  if (keep.size() != static_cast<std::size_t>(n + 1)) throw std::invalid_argument("mask does not match the series");
  InGameStats s;
  double sum_w = 0, sum_s = 0;
  int positions = 0;
  for (int k = 0; k <= n; ++k) {
    if (!keep[static_cast<std::size_t>(k)]) continue;
    double w = series.winrate_of(player, k), sc = series.score_of(player, k);
    sum_w += w;
    sum_s += sc;
    ++positions;
    if (w >= policy.ar_winrate || sc >= policy.ar_score) ++s.ar;
    if (w >= policy.sar_winrate || sc >= policy.sar_score) ++s.sar;
  }
  s.mwr = mean_or_missing(sum_w, positions);
  s.ms = mean_or_missing(sum_s, positions);

  bool have_moves = !series.played.empty() && !series.top_moves.empty();
  double loss_w = 0, loss_s = 0;
  int own = 0, hits = 0, opening = 0, opening_hits = 0;
  for (int m = 1; m <= n; ++m) {
    if (series.mover(m) != player || !keep[static_cast<std::size_t>(m)]) continue;
    ++own;
    loss_w += std::max(0.0, series.winrate_of(player, m - 1) - series.winrate_of(player, m));
    loss_s += std::max(0.0, series.score_of(player, m - 1) - series.score_of(player, m));
    if (!have_moves) continue;
    bool hit = matches_top_k(series.top_moves[static_cast<std::size_t>(m - 1)],
                             series.played[static_cast<std::size_t>(m - 1)], policy.recommend_k);
    hits += hit;
    if (m <= policy.opening_len) {
      ++opening;
      opening_hits += hit;
    }
  }
  s.mlwr = mean_or_missing(loss_w, own);
  s.mls = mean_or_missing(loss_s, own);
  if (have_moves) {
    s.cr = mean_or_missing(hits, own);
    s.cr_opening = mean_or_missing(opening_hits, opening);
  }
  return s;
}

InGameStats per_game_stats(const EvalSeries& series, Color player, const GmPolicy& gm, const UrPolicy& ur,
                           const StatsPolicy& stats) {
  if (series.moves() < 1) throw std::invalid_argument("in-game statistics need at least one move");
  GmResult g;
  std::vector<int> unstable;
  bool degenerate = false;
  auto keep = kept_positions(series, gm, ur, &g, &unstable, &degenerate);
  InGameStats s = stats_from_mask(series, player, keep, stats);
  s.gm_ratio = g.ratio;
  s.ur_count = static_cast<int>(unstable.size());
  s.degenerate = degenerate;
  return s;
}

// ---------------------------------------------------------------- context

ContextFeatures contextual_features(const catalog::PlayerProfile& player, const Date& asof,
                                    std::span<const PlayedGame> history, const catalog::PlayerProfile& opponent,
                                    const catalog::TournamentInfo& tournament, const ContextWindows& windows) {
  for (const auto& g : history)
    if (g.date.days() >= asof.days())
      throw std::invalid_argument("history of " + player.player_id + " contains game " + g.game_id + " dated " +
                                  g.date.iso() + ", not before " + asof.iso());
  ContextFeatures f;
  auto fraction = [](double sum, int count) { return WinFraction{count > 0 ? sum / count : 0.5, count}; };

  auto last_n = [&](int n, auto&& pred) {
    double sum = 0;
    int count = 0;
    for (auto it = history.rbegin(); it != history.rend() && count < n; ++it)
      if (pred(*it)) {
        sum += it->score;
        ++count;
      }
    return fraction(sum, count);
  };
  auto any = [](const PlayedGame&) { return true; };
  f.mr_short = last_n(windows.short_window, any);
  f.mr_long = last_n(windows.long_window, any);
  f.mrr = last_n(windows.long_window, [&](const PlayedGame& g) { return g.opponent_region == opponent.region; });
  f.mur = last_n(std::numeric_limits<int>::max(), [&](const PlayedGame& g) { return g.opponent_id == opponent.player_id; });
  f.tr = last_n(std::numeric_limits<int>::max(), [&](const PlayedGame& g) {
    return !tournament.category.empty() && g.tournament_category == tournament.category;
  });

  double rank_sum = 0, age_sum = 0;
  int ranks = 0, ages = 0, seen = 0;
  for (auto it = history.rbegin(); it != history.rend() && seen < windows.long_window; ++it, ++seen) {
    if (it->opponent_rank) {
      rank_sum += *it->opponent_rank;
      ++ranks;
    }
    if (it->opponent_age) {
      age_sum += *it->opponent_age;
      ++ages;
    }
  }
  f.opp_rank = mean_or_missing(rank_sum, ranks);
  f.opp_age = mean_or_missing(age_sum, ages);
  for (const auto& g : history) f.crc += g.cross_region;
  return f;
}

// ---------------------------------------------------------------- assembly

const char* to_string(Group g) {
  switch (g) {
    case Group::Meta: return "meta";
    case Group::Contextual: return "contextual";
    case Group::InGame: return "ingame";
  }
  return "?";
}

InGameAverages average_stats(std::span<const InGameStats> recent) {
  InGameAverages a;
  a.games = static_cast<int>(recent.size());
  auto avg = [&](auto field) {
    double sum = 0;
    int n = 0;
    for (const auto& s : recent) {
      double v = static_cast<double>(field(s));
      if (!missing(v)) {
        sum += v;
        ++n;
      }
    }
    return mean_or_missing(sum, n);
  };
  a.gm_ratio = avg([](const InGameStats& s) { return s.gm_ratio; });
  a.ur_count = avg([](const InGameStats& s) { return s.ur_count; });
  a.mwr = avg([](const InGameStats& s) { return s.mwr; });
  a.ms = avg([](const InGameStats& s) { return s.ms; });
  a.mlwr = avg([](const InGameStats& s) { return s.mlwr; });
  a.mls = avg([](const InGameStats& s) { return s.mls; });
  a.ar = avg([](const InGameStats& s) { return s.ar; });
  a.sar = avg([](const InGameStats& s) { return s.sar; });
  a.cr = avg([](const InGameStats& s) { return s.cr; });
  a.cr_opening = avg([](const InGameStats& s) { return s.cr_opening; });
  return a;
}

namespace {

class RowBuilder {
 public:
  explicit RowBuilder(std::vector<Column>* columns) : columns_(columns) {}

  void add(const std::string& name, Group g, double v) {
    if (columns_) columns_->push_back(Column{name, g, false});
    values.push_back(v);
  }
  void add_nullable(const std::string& name, Group g, double v) {
    if (columns_) columns_->push_back(Column{name, g, true});
    values.push_back(v);
    if (columns_) columns_->push_back(Column{name + "_present", g, false});
    values.push_back(missing(v) ? 0.0 : 1.0);
  }
  // Black, white and black-minus-white.
  void triple(const std::string& name, Group g, double b, double w, bool nullable) {
    double d = missing(b) || missing(w) ? kMissing : b - w;
    if (nullable) {
      add_nullable(name + "_black", g, b);
      add_nullable(name + "_white", g, w);
      add_nullable(name + "_diff", g, d);
    } else {
      add(name + "_black", g, b);
      add(name + "_white", g, w);
      add(name + "_diff", g, d);
    }
  }

  std::vector<double> values;

 private:
  std::vector<Column>* columns_;
};

double flag(bool b) { return b ? 1.0 : 0.0; }

double opt(const std::optional<double>& v) { return v ? *v : kMissing; }

double region_is(const catalog::PlayerProfile& p, catalog::Region r) {
  return p.region == catalog::Region::Unknown ? kMissing : flag(p.region == r);
}

double female(const catalog::PlayerProfile& p) {
  return p.gender == catalog::Gender::Unknown ? kMissing : flag(p.gender == catalog::Gender::Female);
}

std::vector<double> build_row(const FeatureInputs& in, std::vector<Column>* columns) {
  using catalog::Importance;
  using catalog::Region;
  using catalog::RegionScope;
  using catalog::TournamentKind;
  RowBuilder r(columns);
  const auto& t = in.tournament;
  const auto& B = in.black;
  const auto& W = in.white;

  // meta, game level
  r.add("meta_year", Group::Meta, in.date.fractional_year());
  r.add_nullable("meta_komi", Group::Meta, opt(in.komi));
  r.add("meta_tour_matched", Group::Meta, flag(t.matched));
  r.add_nullable("meta_tour_international", Group::Meta,
                 t.region_scope == RegionScope::Unknown ? kMissing : flag(t.region_scope == RegionScope::International));
  bool imp_known = t.importance != Importance::Unknown;
  r.add_nullable("meta_tour_world_major", Group::Meta, imp_known ? flag(t.importance == Importance::WorldMajor) : kMissing);
  r.add_nullable("meta_tour_regional_major", Group::Meta,
                 imp_known ? flag(t.importance == Importance::RegionalMajor) : kMissing);
  bool kind_known = t.kind != TournamentKind::Unknown;
  for (auto [name, kind] : {std::pair{"elimination", TournamentKind::Elimination}, std::pair{"league", TournamentKind::League},
                            std::pair{"team", TournamentKind::Team}, std::pair{"friendly", TournamentKind::Friendly}})
    r.add_nullable(std::string("meta_tour_") + name, Group::Meta, kind_known ? flag(t.kind == kind) : kMissing);

  // meta, per player
  r.triple("meta_age", Group::Meta, opt(B.age), opt(W.age), true);
  r.triple("meta_female", Group::Meta, female(B.profile), female(W.profile), true);
  for (auto [name, region] : {std::pair{"chn", Region::CHN}, std::pair{"kor", Region::KOR}, std::pair{"jpn", Region::JPN},
                              std::pair{"twn", Region::TWN}, std::pair{"other", Region::Other}})
    r.triple(std::string("meta_region_") + name, Group::Meta, region_is(B.profile, region), region_is(W.profile, region),
             true);
  auto rank = [](const SideInputs& s) { return s.profile.rank ? static_cast<double>(*s.profile.rank) : kMissing; };
  r.triple("meta_rank", Group::Meta, rank(B), rank(W), true);
  auto ws = [](const SideInputs& s) { return s.whr ? s.whr->rating : kMissing; };
  auto wu = [](const SideInputs& s) { return s.whr ? s.whr->uncertainty : kMissing; };
  r.triple("meta_whr", Group::Meta, ws(B), ws(W), true);
  r.triple("meta_whr_uncertainty", Group::Meta, wu(B), wu(W), true);

  // contextual
  auto wf = [&](const std::string& name, const WinFraction& b, const WinFraction& w) {
    r.triple(name, Group::Contextual, b.value, w.value, false);
    r.triple(name + "_n", Group::Contextual, b.count, w.count, false);
  };
  wf("ctx_mr_short", B.context.mr_short, W.context.mr_short);
  wf("ctx_mr_long", B.context.mr_long, W.context.mr_long);
  wf("ctx_mrr", B.context.mrr, W.context.mrr);
  wf("ctx_mur", B.context.mur, W.context.mur);
  wf("ctx_tr", B.context.tr, W.context.tr);
  r.triple("ctx_or", Group::Contextual, B.context.opp_rank, W.context.opp_rank, true);
  r.triple("ctx_oa", Group::Contextual, B.context.opp_age, W.context.opp_age, true);
  r.triple("ctx_crc", Group::Contextual, B.context.crc, W.context.crc, false);

  // in-game
  auto games = [](const SideInputs& s) { return s.ingame ? static_cast<double>(s.ingame->games) : 0.0; };
  r.triple("ingame_games", Group::InGame, games(B), games(W), false);
  auto ig = [&](const std::string& name, double InGameAverages::*field) {
    double b = B.ingame ? (*B.ingame).*field : kMissing;
    double w = W.ingame ? (*W.ingame).*field : kMissing;
    r.triple("ingame_" + name, Group::InGame, b, w, true);
  };
  ig("gm_ratio", &InGameAverages::gm_ratio);
  ig("ur_count", &InGameAverages::ur_count);
  ig("mwr", &InGameAverages::mwr);
  ig("ms", &InGameAverages::ms);
  ig("mlwr", &InGameAverages::mlwr);
  ig("mls", &InGameAverages::mls);
  ig("ar", &InGameAverages::ar);
  ig("sar", &InGameAverages::sar);
  ig("cr", &InGameAverages::cr);
  ig("cr_opening", &InGameAverages::cr_opening);
  return std::move(r.values);
}

}  // namespace

const std::vector<Column>& schema() {
  static const std::vector<Column> columns = [] {
    std::vector<Column> c;
    build_row(FeatureInputs{}, &c);
    return c;
  }();
  return columns;
}

const std::vector<std::string>& column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : schema()) n.push_back(c.name);
    return n;
  }();
  return names;
}

std::size_t column_index(std::string_view name) {
  const auto& names = column_names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no feature column " + std::string(name));
  return static_cast<std::size_t>(it - names.begin());
}

bool FeatureVector::operator==(const FeatureVector& o) const {
  if (game_id != o.game_id || !(date == o.date) || label != o.label || category != o.category ||
      values.size() != o.values.size())
    return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (missing(values[i]) != missing(o.values[i])) return false;
    if (!missing(values[i]) && std::memcmp(&values[i], &o.values[i], sizeof(double)) != 0) return false;
  }
  return true;
}

FeatureVector assemble_feature_vector(const FeatureInputs& in) {
  FeatureVector v;
  v.game_id = in.game_id;
  v.date = in.date;
  v.label = in.label.value_or(0);
  v.category = in.category;
  v.values = build_row(in, nullptr);
  return v;
}

// ---------------------------------------------------------------- corpus

namespace {

template <class F>
void parallel_for(std::size_t n, int workers, F&& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct PlayerLog {
  std::vector<PlayedGame> games;
  std::vector<const InGameStats*> stats;  // null when the game was not analyzed
};

Date checkpoint_for(const Date& d, const std::optional<Date>& freeze) {
  Date jan1(d.year(), 1, 1);
  if (freeze && *freeze < jan1) return *freeze;
  return jan1;
}

}  // namespace

std::vector<FeatureVector> build_features(std::span<const catalog::CatalogedGame> games,
                                          const std::map<std::string, engine::AnalyzedGame>& analyzed,
                                          const FeatureConfig& config, int workers) {
  config.gm.validate();
  config.ur.validate();
  std::vector<const catalog::CatalogedGame*> kept;
  for (const auto& g : games)
    if (g.kept() && g.black_score()) kept.push_back(&g);
  std::sort(kept.begin(), kept.end(), [](auto* a, auto* b) {
    if (a->date().days() != b->date().days()) return a->date().days() < b->date().days();
    return a->game.game_id < b->game.game_id;
  });

  // per-game in-game statistics for both colors
  std::vector<std::optional<std::pair<InGameStats, InGameStats>>> stats(kept.size());
  parallel_for(kept.size(), workers, [&](std::size_t i) {
    auto it = analyzed.find(kept[i]->game.game_id);
    if (it == analyzed.end() || kept[i]->game.moves.empty()) return;
    if (it->second.evals.size() != kept[i]->game.moves.size() + 1) return;  // partial analysis
    EvalSeries s = EvalSeries::from(it->second, &kept[i]->game);
    stats[i] = std::pair{per_game_stats(s, Color::Black, config.gm, config.ur, config.stats),
                         per_game_stats(s, Color::White, config.gm, config.ur, config.stats)};
  });

  std::map<std::string, PlayerLog> logs;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& g = *kept[i];
    double bs = *g.black_score();
    bool cross = g.region_pair == catalog::RegionPair::CR;
    auto side = [&](const catalog::PlayerProfile& me, const catalog::PlayerProfile& opp, double score,
                    const InGameStats* st) {
      PlayedGame p;
      p.date = g.date();
      p.game_id = g.game.game_id;
      p.opponent_id = opp.player_id;
      p.opponent_region = opp.region;
      p.opponent_rank = opp.rank;
      p.opponent_age = catalog::age_at(opp, g.date());
      p.tournament_category = g.tournament.category;
      p.score = score;
      p.cross_region = cross;
      auto& log = logs[me.player_id];
      log.games.push_back(std::move(p));
      log.stats.push_back(st);
    };
    side(g.black, g.white, bs, stats[i] ? &stats[i]->first : nullptr);
    side(g.white, g.black, 1.0 - bs, stats[i] ? &stats[i]->second : nullptr);
  }

  // whole-history fits on everything before each checkpoint
  std::vector<std::size_t> rows;
  std::set<int> checkpoint_days;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (*kept[i]->black_score() == 0.5) continue;
    rows.push_back(i);
    checkpoint_days.insert(checkpoint_for(kept[i]->date(), config.freeze_at).days());
  }
  std::vector<int> days(checkpoint_days.begin(), checkpoint_days.end());
  std::vector<rating::RatingHistory> fits(days.size());
  parallel_for(days.size(), workers, [&](std::size_t c) {
    std::vector<rating::RatedGame> rated;
    for (const auto* g : kept) {
      if (g->date().days() >= days[c]) break;
      rated.push_back(rating::RatedGame{g->black.player_id, g->white.player_id, g->date(), *g->black_score()});
    }
    fits[c] = rating::whr_fit(rated, config.whr);
  });

  std::vector<FeatureVector> out(rows.size());
  parallel_for(rows.size(), workers, [&](std::size_t r) {
    const auto& g = *kept[rows[r]];
    Date cutoff = config.freeze_at && *config.freeze_at < g.date() ? *config.freeze_at : g.date();
    int cp = checkpoint_for(g.date(), config.freeze_at).days();
    const auto& fit = fits[static_cast<std::size_t>(std::lower_bound(days.begin(), days.end(), cp) - days.begin())];

    auto side = [&](const catalog::PlayerProfile& me, const catalog::PlayerProfile& opp) {
      SideInputs s;
      s.profile = me;
      s.age = catalog::age_at(me, g.date());
      if (rating::has_player(fit, me.player_id)) s.whr = rating::rating_at(fit, me.player_id, g.date());
      const PlayerLog& log = logs.at(me.player_id);
      auto end = std::lower_bound(log.games.begin(), log.games.end(), cutoff.days(),
                                  [](const PlayedGame& p, int day) { return p.date.days() < day; });
      auto n = static_cast<std::size_t>(end - log.games.begin());
      s.context = contextual_features(me, cutoff, std::span(log.games.data(), n), opp, g.tournament, config.windows);
      std::vector<InGameStats> recent;
      for (std::size_t i = n; i-- > 0 && recent.size() < static_cast<std::size_t>(config.ingame_recent);)
        if (log.stats[i]) recent.push_back(*log.stats[i]);
      std::reverse(recent.begin(), recent.end());
      if (!recent.empty()) s.ingame = average_stats(recent);
      return s;
    };
    FeatureInputs in;
    in.game_id = g.game.game_id;
    in.date = g.date();
    in.komi = g.game.komi;
    in.tournament = g.tournament;
    in.category = g.region_pair;
    in.label = *g.black_score() == 1.0 ? 1 : 0;
    in.black = side(g.black, g.white);
    in.white = side(g.white, g.black);
    out[r] = assemble_feature_vector(in);
  });
  return out;
}

// ---------------------------------------------------------------- csv

CsvTable features_to_csv(std::span<const FeatureVector> rows) {
  CsvTable t;
  t.header = {"game_id", "date", "label", "category"};
  for (const auto& n : column_names()) t.header.push_back(n);
  for (const auto& r : rows) {
    std::vector<std::string> line = {r.game_id, r.date.iso(), std::to_string(r.label), catalog::to_string(r.category)};
    for (double v : r.values) line.push_back(missing(v) ? "" : format_shortest(v));
    t.rows.push_back(std::move(line));
  }
  return t;
}

std::vector<FeatureVector> features_from_csv(const CsvTable& table) {
  const auto& names = column_names();
  if (table.header.size() != names.size() + 4 || !std::equal(names.begin(), names.end(), table.header.begin() + 4))
    throw std::runtime_error("feature table columns do not match this build's schema");
  std::vector<FeatureVector> out;
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw std::runtime_error("feature row with wrong field count");
    FeatureVector v;
    v.game_id = row[0];
    auto d = Date::parse(row[1]);
    if (!d) throw std::runtime_error("bad date in feature row " + row[0]);
    v.date = *d;
    v.label = row[2] == "1" ? 1 : 0;
    auto cat = catalog::parse_region_pair(row[3]);
    if (!cat) throw std::runtime_error("bad category in feature row " + row[0]);
    v.category = *cat;
    for (std::size_t i = 4; i < row.size(); ++i) v.values.push_back(row[i].empty() ? kMissing : std::stod(row[i]));
    out.push_back(std::move(v));
  }
  return out;
}

CsvTable schema_to_csv() {
  CsvTable t;
  t.header = {"column", "group", "nullable"};
  for (const auto& c : schema()) t.rows.push_back({c.name, to_string(c.group), c.nullable ? "1" : "0"});
  return t;
}

}  // namespace gostat::features
