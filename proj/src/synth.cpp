#include "gostat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gostat/csv.hpp"
#include "gostat/random.hpp"

namespace gostat::synth {

namespace fs = std::filesystem;
using catalog::Importance;
using catalog::RegionScope;
using catalog::TournamentKind;

void SyntheticSpec::validate() const {
  if (n_players < 0 || n_games < 0) throw std::invalid_argument("synthetic: negative player or game count");
  if (end < start) throw std::invalid_argument("synthetic: date range is reversed");
  if (!(strength_gap >= 0.0) || !(strength_jitter >= 0.0))
    throw std::invalid_argument("synthetic: strength gap and jitter must be >= 0");
  if (!(black_advantage > 0.0 && black_advantage < 1.0))
    throw std::invalid_argument("synthetic: black_advantage must lie in (0, 1)");
  if (!(mistake_rate >= 0.0 && mistake_rate <= 1.0)) throw std::invalid_argument("synthetic: mistake_rate outside [0, 1]");
  if (!(mistake_size > 0.0 && mistake_size < 0.4)) throw std::invalid_argument("synthetic: mistake_size outside (0, 0.4)");
  if (min_moves < 40 || max_moves < min_moves || max_moves > 361)
    throw std::invalid_argument("synthetic: move range must satisfy 40 <= min <= max <= 361");
  auto check_weights = [](double total, bool any_negative, const char* what) {
    if (any_negative || !(total > 0.0)) throw std::invalid_argument(std::string("synthetic: bad ") + what + " weights");
  };
  double t = 0;
  bool neg = false;
  for (const auto& k : komi_mix) t += k.weight, neg |= k.weight < 0;
  check_weights(t, neg, "komi");
  t = 0;
  for (const auto& r : region_mix) t += r.weight, neg |= r.weight < 0;
  check_weights(t, neg, "region");
}

namespace {

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  double total = 0;
  for (const auto& i : items) total += i.weight;
  double u = rng.uniform() * total;
  for (const auto& i : items) {
    if (u < i.weight) return i;
    u -= i.weight;
  }
  return items.back();
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

std::string file_name(int index, int width) {
  std::string n = std::to_string(index);
  return "g" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(n.size()))), '0') + n + ".sgf";
}

struct TournamentSeed {
  const char* category;
  RegionScope scope;
  Importance importance;
  TournamentKind kind;
  double weight;
};

constexpr TournamentSeed kTournaments[] = {
    {"Global Cup", RegionScope::International, Importance::WorldMajor, TournamentKind::Elimination, 0.30},
    {"Dragon League", RegionScope::NonInternational, Importance::RegionalMajor, TournamentKind::League, 0.35},
    {"Team Masters", RegionScope::International, Importance::Other, TournamentKind::Team, 0.20},
    {"Friendly Match", RegionScope::NonInternational, Importance::Other, TournamentKind::Friendly, 0.15},
};

// Black-perspective winrates for positions 0..n: a noisy drift from the
// opening value toward the winner, then a flat decided tail.
std::vector<double> winrate_path(Rng& rng, int n, double w0, bool black_wins, int decided_at) {
  std::vector<double> w(static_cast<std::size_t>(n + 1));
  double mid = logit(black_wins ? 0.70 : 0.30);
  double tail = logit(black_wins ? 0.97 : 0.03);
  double noise = 0.0;
  w[0] = w0;
  for (int k = 1; k <= n; ++k) {
    double l;
    if (k < decided_at) {
      double t = static_cast<double>(k) / decided_at;
      noise = 0.7 * noise + rng.normal(0.0, 0.06);
      l = (1.0 - t) * logit(w0) + t * mid + noise;
    } else {
      l = tail + rng.normal(0.0, 0.05);
    }
    w[static_cast<std::size_t>(k)] = sigmoid(l);
  }
  return w;
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticCorpus out;
  for (const auto& t : kTournaments) {
    catalog::TournamentInfo info;
    info.category = t.category;
    info.region_scope = t.scope;
    info.importance = t.importance;
    info.kind = t.kind;
    out.tournaments.push_back(info);
  }
  if (spec.n_players == 0 || spec.n_games == 0) {
    out.warnings.push_back("synthetic: zero players or games requested; corpus is empty");
    return out;
  }
  if (spec.n_players < 2) {
    out.warnings.push_back("synthetic: fewer than two players; corpus is empty");
    return out;
  }

  Rng rng(spec.seed);
  int np = spec.n_players;

  std::vector<double> strength(static_cast<std::size_t>(np), 0.0);
  for (int i = 1; i < np; ++i)
    strength[static_cast<std::size_t>(i)] =
        strength[static_cast<std::size_t>(i - 1)] + spec.strength_gap + spec.strength_jitter * rng.uniform();
  double center = (strength.front() + strength.back()) / 2.0;
  for (auto& s : strength) s -= center;

  for (int i = 0; i < np; ++i) {
    catalog::PlayerProfile p;
    p.player_id = "p" + two_digits(i + 1);
    p.canonical_name = "Player " + two_digits(i + 1);
    p.birth_date = Date(1970 + static_cast<int>(rng.below(30)), 1 + static_cast<unsigned>(rng.below(12)),
                        1 + static_cast<unsigned>(rng.below(28)));
    p.gender = rng.chance(0.2) ? catalog::Gender::Female : catalog::Gender::Male;
    p.region = pick(rng, spec.region_mix).region;
    // Ranks follow strength order so meta columns carry signal.
    p.rank = np == 1 ? 9 : 1 + static_cast<int>(std::lround(8.0 * i / (np - 1)));
    out.players.push_back(std::move(p));
  }
  out.strengths = strength;

  std::vector<double> tweights;
  for (const auto& t : kTournaments) tweights.push_back(t.weight);
  struct Weighted {
    std::size_t index;
    double weight;
  };
  std::vector<Weighted> tourney_pick;
  for (std::size_t i = 0; i < tweights.size(); ++i) tourney_pick.push_back({i, tweights[i]});

  int span = days_between(spec.start, spec.end);
  std::vector<int> day_offsets;
  for (int g = 0; g < spec.n_games; ++g) day_offsets.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(span) + 1)));
  std::sort(day_offsets.begin(), day_offsets.end());

  int width = std::max(4, static_cast<int>(std::to_string(spec.n_games).size()));
  double bias = logit(spec.black_advantage);

  for (int g = 0; g < spec.n_games; ++g) {
    SyntheticGame sg;
    auto b = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(np)));
    auto w = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(np - 1)));
    if (w >= b) ++w;
    sg.black_id = out.players[b].player_id;
    sg.white_id = out.players[w].player_id;
    sg.p_black = sigmoid(strength[b] - strength[w] + bias);
    bool black_wins = rng.chance(sg.p_black);

    double komi = pick(rng, spec.komi_mix).komi;
    const auto& t = kTournaments[pick(rng, tourney_pick).index];
    Date date = Date::from_days(spec.start.days() + day_offsets[static_cast<std::size_t>(g)]);

    int n = spec.min_moves + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_moves - spec.min_moves + 1)));
    int tail = 5 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n / 4 - 4)));
    sg.decided_at = n - tail + 1;

    auto& rec = sg.record;
    rec.black_name = out.players[b].canonical_name;
    rec.white_name = out.players[w].canonical_name;
    rec.komi = komi;
    rec.date = date;
    rec.event = std::to_string(date.year()) + " " + t.category;
    rec.round = t.kind == TournamentKind::Elimination ? "Round " + std::to_string(1 + rng.below(5))
                                                      : "Game " + std::to_string(1 + rng.below(12));
    rec.result.winner = black_wins ? sgf::Color::Black : sgf::Color::White;
    if (rng.chance(0.3)) {
      rec.result.kind = sgf::ResultKind::PointsWin;
      rec.result.margin = 0.5 + static_cast<double>(rng.below(15));
    } else {
      rec.result.kind = sgf::ResultKind::Resignation;
    }

    std::vector<int> cells(361);
    for (int i = 0; i < 361; ++i) cells[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < n; ++i) {
      auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(361 - i)));
      std::swap(cells[static_cast<std::size_t>(i)], cells[j]);
      sgf::Move m;
      m.color = i % 2 == 0 ? sgf::Color::Black : sgf::Color::White;
      m.point = sgf::Point{cells[static_cast<std::size_t>(i)] % 19, cells[static_cast<std::size_t>(i)] / 19};
      m.ordinal = i + 1;
      rec.moves.push_back(m);
    }
    rec.raw_properties.emplace("RU", "Japanese");
    rec.raw_properties.emplace("PC", t.scope == RegionScope::International ? "Online" : "Seoul");

    double w0 = std::clamp(spec.black_advantage - 0.015 * (komi - 6.5), 0.05, 0.95);
    auto wr = winrate_path(rng, n, w0, black_wins, sg.decided_at);

    if (rng.chance(spec.mistake_rate) && sg.decided_at - 20 > 10) {
      int x = 10 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sg.decided_at - 20 - 10)));
      // Mover of x loses mistake_size, the reply gives back slightly less.
      double sign = x % 2 == 1 ? 1.0 : -1.0;  // +1 when black moves at x
      auto ux = static_cast<std::size_t>(x);
      wr[ux] = wr[ux - 1] - sign * spec.mistake_size;
      wr[ux + 1] = wr[ux] + sign * (spec.mistake_size - 0.005);
      sg.mistakes.push_back(x);
    }

    // Recommendations: the stronger side matches the engine more often.
    auto hit_rate = [&](std::size_t player) { return 0.25 + 0.35 * static_cast<double>(player) / (np - 1); };
    sg.script.resize(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
      auto& e = sg.script[static_cast<std::size_t>(k)];
      e.winrate_black = wr[static_cast<std::size_t>(k)];
      e.score_black = 2.5 * logit(std::clamp(e.winrate_black, 1e-6, 1.0 - 1e-6));
      if (k == n) continue;
      const auto& next = rec.moves[static_cast<std::size_t>(k)];
      std::size_t mover = next.color == sgf::Color::Black ? b : w;
      std::vector<sgf::Point> cand;
      if (rng.chance(hit_rate(mover))) cand.push_back(*next.point);
      while (cand.size() < 3) {
        int c = static_cast<int>(rng.below(361));
        sgf::Point p{c % 19, c / 19};
        if (std::find(cand.begin(), cand.end(), p) == cand.end() && !(p == *next.point)) cand.push_back(p);
      }
      const int visits[3] = {60, 25, 15};
      for (std::size_t i = 0; i < 3; ++i) e.top_moves.push_back({cand[i], visits[i]});
    }

    rec.game_id = sgf::compute_game_id(rec);
    sg.file_name = file_name(g + 1, width);
    out.games.push_back(std::move(sg));
  }
  return out;
}

void write_corpus(const SyntheticCorpus& corpus, const fs::path& dir) {
  fs::create_directories(dir / "engine_script");
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".sgf") fs::remove(entry.path());
  for (const auto& entry : fs::directory_iterator(dir / "engine_script"))
    if (entry.is_regular_file()) fs::remove(entry.path());

  catalog::PlayerTable players;
  for (const auto& p : corpus.players) players.add(p);
  write_csv(dir / "players.csv", players.to_csv());
  catalog::TournamentTable tournaments;
  for (const auto& t : corpus.tournaments) tournaments.add(t);
  write_csv(dir / "tournaments.csv", tournaments.to_csv());

  CsvTable truth;
  truth.header = {"game_id", "file", "black_id", "white_id", "black_strength", "white_strength", "p_black",
                  "decided_at", "mistakes"};
  auto strength_of = [&](const std::string& id) {
    for (std::size_t i = 0; i < corpus.players.size(); ++i)
      if (corpus.players[i].player_id == id) return corpus.strengths[i];
    throw std::logic_error("synthetic: unknown player " + id);
  };
  for (const auto& g : corpus.games) {
    write_file(dir / g.file_name, sgf::serialize_sgf(g.record) + "\n");
    write_file(dir / "engine_script" / (g.record.game_id + ".json"), engine::script_to_json(g.record.game_id, g.script));
    std::string mistakes;
    for (int m : g.mistakes) mistakes += (mistakes.empty() ? "" : ";") + std::to_string(m);
    truth.rows.push_back({g.record.game_id, g.file_name, g.black_id, g.white_id, format_shortest(strength_of(g.black_id)),
                          format_shortest(strength_of(g.white_id)), format_shortest(g.p_black),
                          std::to_string(g.decided_at), mistakes});
  }
  write_csv(dir / "truth.csv", truth);
}

}  // namespace gostat::synth
