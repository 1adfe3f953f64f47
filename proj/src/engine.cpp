#include "gostat/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gostat/hash.hpp"
#include "gostat/random.hpp"

namespace gostat::engine {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kGtpColumns = "ABCDEFGHJKLMNOPQRSTUVWXYZ";

double round_to(double v, double scale) { return std::round(v * scale) / scale; }

// Splits "game/turn/visits" ids produced by encode_query.
struct QueryId {
  std::string game_id;
  int turn = 0;
  int visits = 0;
};

QueryId parse_id(const std::string& id) {
  QueryId q;
  auto a = id.rfind('/');
  auto b = a == std::string::npos ? std::string::npos : id.rfind('/', a - 1);
  if (a == std::string::npos || b == std::string::npos) throw EngineError("malformed query id " + id, -1, false);
  q.game_id = id.substr(0, b);
  q.turn = std::stoi(id.substr(b + 1, a - b - 1));
  q.visits = std::stoi(id.substr(a + 1));
  return q;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void AnalysisPolicy::validate() const {
  if (initial_visits <= 0) throw std::invalid_argument("initial_visits must be positive");
  if (escalated_visits <= initial_visits) throw std::invalid_argument("escalated_visits must exceed initial_visits");
  if (!(winrate_jump > 0) || !(score_jump > 0)) throw std::invalid_argument("jump thresholds must be positive");
}

bool needs_reeval(const MoveEval& prev, const MoveEval& cur, const AnalysisPolicy& policy) {
  return std::abs(cur.winrate_black - prev.winrate_black) > policy.winrate_jump ||
         std::abs(cur.score_black - prev.score_black) > policy.score_jump;
}

double quantize_winrate(double w) { return round_to(w, 1e6); }
double quantize_score(double s) { return round_to(s, 1e2); }

std::string gtp_vertex(const std::optional<sgf::Point>& point, int board_size) {
  if (!point) return "pass";
  if (point->col < 0 || point->col >= static_cast<int>(kGtpColumns.size()))
    throw std::invalid_argument("column outside GTP range");
  return std::string(1, kGtpColumns[point->col]) + std::to_string(board_size - point->row);
}

std::optional<sgf::Point> parse_gtp_vertex(std::string_view v, int board_size) {
  if (v == "pass" || v == "PASS" || v == "Pass") return std::nullopt;
  if (v.size() < 2) throw std::invalid_argument("bad vertex");
  char c = static_cast<char>(std::toupper(static_cast<unsigned char>(v[0])));
  auto col = kGtpColumns.find(c);
  if (col == std::string_view::npos) throw std::invalid_argument("bad vertex column");
  int row = board_size - std::stoi(std::string(v.substr(1)));
  if (row < 0 || row >= board_size || static_cast<int>(col) >= board_size)
    throw std::invalid_argument("vertex off board");
  return sgf::Point{static_cast<int>(col), row};
}

std::string encode_moves(const std::vector<sgf::Move>& moves, int board_size) {
  std::string out = "[";
  for (const auto& m : moves) {
    if (out.size() > 1) out += ',';
    out += "[\"";
    out += sgf::color_letter(m.color);
    out += "\",\"" + gtp_vertex(m.point, board_size) + "\"]";
  }
  return out + "]";
}

std::string encode_query(const Query& q, std::string_view moves_json) {
  json j;
  j["id"] = q.game_id + "/" + std::to_string(q.turn) + "/" + std::to_string(q.visits);
  j["moves"] = nullptr;
  j["rules"] = q.rules_label;
  if (q.komi) j["komi"] = *q.komi;
  j["boardXSize"] = q.board_size;
  j["boardYSize"] = q.board_size;
  j["analyzeTurns"] = json::array({q.turn});
  j["maxVisits"] = q.visits;
  j["overrideSettings"] = {{"reportAnalysisWinratesAs", "BLACK"}};
  std::string text = j.dump();
  const std::string hole = "\"moves\":null";
  text.replace(text.find(hole), hole.size(), "\"moves\":" + std::string(moves_json));
  return text;
}

std::string encode_query(const Query& q) {
  return encode_query(q, q.moves ? encode_moves(*q.moves, q.board_size) : std::string("[]"));
}

MoveEval decode_response(std::string_view line, int board_size) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw EngineError(std::string("unparseable engine response: ") + e.what(), -1, false);
  }
  if (j.contains("error")) throw EngineError("engine error: " + j["error"].get<std::string>(), -1, false);
  if (!j.contains("rootInfo")) throw EngineError("engine response without rootInfo", -1, false);
  QueryId id = parse_id(j.at("id").get<std::string>());
  MoveEval e;
  e.ordinal = j.value("turnNumber", id.turn);
  const auto& root = j.at("rootInfo");
  e.winrate_black = quantize_winrate(root.at("winrate").get<double>());
  e.score_black = quantize_score(root.at("scoreLead").get<double>());
  e.visits_used = id.visits;
  if (j.contains("moveInfos")) {
    std::vector<std::pair<int, TopMove>> ordered;
    for (const auto& mi : j["moveInfos"]) {
      TopMove t;
      t.point = parse_gtp_vertex(mi.at("move").get<std::string>(), board_size);
      t.visits = mi.value("visits", 0);
      ordered.emplace_back(mi.value("order", static_cast<int>(ordered.size())), t);
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [order, t] : ordered) e.top_moves.push_back(t);
  }
  if (e.winrate_black < 0 || e.winrate_black > 1) throw EngineError("winrate outside [0,1]", -1, false);
  return e;
}

// ---------------------------------------------------------------- mock

MockEngine::MockEngine(std::uint64_t seed) : seed_(seed) {}

MockEngine::MockEngine(std::map<std::string, Script> scripts, std::optional<std::uint64_t> fallback_seed)
    : seed_(fallback_seed), scripts_(std::move(scripts)) {}

MockEngine MockEngine::from_table(Script table) {
  MockEngine m(std::map<std::string, Script>{}, std::nullopt);
  m.table_ = std::move(table);
  return m;
}

std::string MockEngine::exchange(const std::string& request_line) {
  ++queries_;
  // Keep only the vertex strings of the move list; the full DOM is costly for long games.
  std::vector<std::string> moves;
  json req = json::parse(request_line, [&](int depth, json::parse_event_t event, json& parsed) {
    if (depth == 3 && event == json::parse_event_t::value && parsed.is_string() && parsed.get_ref<const std::string&>().size() > 1)
      moves.push_back(parsed.get<std::string>());
    if (depth == 2 && event == json::parse_event_t::array_end) return false;
    return true;
  });
  std::string id = req.at("id").get<std::string>();
  QueryId q = parse_id(id);
  int board_size = req.value("boardXSize", 19);
  int turn = req.at("analyzeTurns").at(0).get<int>();
  int visits = req.at("maxVisits").get<int>();

  json resp;
  resp["id"] = id;
  resp["turnNumber"] = turn;
  resp["isDuringSearch"] = false;

  const Script* script = table_ ? &*table_ : nullptr;
  if (!script) {
    if (auto it = scripts_.find(q.game_id); it != scripts_.end()) script = &it->second;
  }

  double winrate = 0.5;
  double score = 0.0;
  json infos = json::array();
  if (script) {
    if (turn < 0 || static_cast<std::size_t>(turn) >= script->size()) {
      resp["error"] = "turn " + std::to_string(turn) + " beyond scripted length " + std::to_string(script->size());
      return resp.dump();
    }
    const ScriptedEval& s = (*script)[static_cast<std::size_t>(turn)];
    bool deep = visits > 100 && s.escalated_winrate_black.has_value();
    winrate = deep ? *s.escalated_winrate_black : s.winrate_black;
    score = deep && s.escalated_score_black ? *s.escalated_score_black : s.score_black;
    int order = 0;
    for (const auto& t : s.top_moves)
      infos.push_back({{"move", gtp_vertex(t.point, board_size)}, {"visits", t.visits}, {"order", order++}});
  } else if (seed_) {
    // Logit random walk; step k depends only on (seed, game, k).
    std::uint64_t base = hash_combine(*seed_, q.game_id);
    auto& walk = walks_[q.game_id];
    if (walk.empty()) walk.push_back(0.0);
    while (static_cast<int>(walk.size()) <= turn) {
      Rng r(mix64(base ^ static_cast<std::uint64_t>(walk.size())));
      double step = r.normal(0.0, 0.18);
      if (r.chance(0.03)) step += (r.chance(0.5) ? 1.0 : -1.0) * r.uniform(0.4, 1.2);
      walk.push_back(walk.back() + step);
    }
    double x = turn >= 0 ? walk[static_cast<std::size_t>(turn)] : 0.0;
    Rng deep(mix64(base ^ (static_cast<std::uint64_t>(turn) << 20) ^ static_cast<std::uint64_t>(visits)));
    if (visits > 100) x += deep.normal(0.0, 0.05);
    winrate = logistic(x);
    score = 7.0 * x;
    // Recommendation list: the move actually played next is top-1 half the time.
    Rng pick(mix64(base ^ 0xC0FFEEULL ^ static_cast<std::uint64_t>(turn)));
    std::vector<std::string> cands;
    if (static_cast<std::size_t>(turn) < moves.size() && pick.chance(0.5))
      cands.push_back(moves[static_cast<std::size_t>(turn)]);
    while (cands.size() < 3) {
      sgf::Point p{static_cast<int>(pick.below(board_size)), static_cast<int>(pick.below(board_size))};
      std::string v = gtp_vertex(p, board_size);
      if (std::find(cands.begin(), cands.end(), v) == cands.end()) cands.push_back(v);
    }
    int remaining = visits;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      int v = i + 1 == cands.size() ? remaining : remaining / 2;
      remaining -= v;
      infos.push_back({{"move", cands[i]}, {"visits", v}, {"order", static_cast<int>(i)}});
    }
  } else {
    resp["error"] = "no script for game " + q.game_id;
    return resp.dump();
  }
  resp["rootInfo"] = {{"winrate", winrate}, {"scoreLead", score}, {"visits", visits},
                      {"currentPlayer", turn % 2 == 0 ? "B" : "W"}};
  resp["moveInfos"] = std::move(infos);
  return resp.dump();
}

// ---------------------------------------------------------------- evaluation

AnalyzedGame evaluate_game(const sgf::GameRecord& record, Engine& engine, const AnalysisPolicy& policy,
                           const std::string& rules_label, const AnalyzedGame* resume, const EvalSink& on_eval) {
  policy.validate();
  AnalyzedGame out;
  out.game_id = record.game_id;
  out.komi = record.komi;
  out.rules_label = rules_label;
  out.policy = policy;

  const int n = static_cast<int>(record.moves.size());
  std::optional<MoveEval> prev_shallow;
  if (resume) {
    if (resume->game_id != record.game_id) throw std::invalid_argument("resume data belongs to another game");
    if (!(resume->policy == policy)) throw std::invalid_argument("resume data was produced under another policy");
    if (static_cast<int>(resume->evals.size()) > n + 1) throw std::invalid_argument("resume data longer than game");
    out.evals = resume->evals;
    if (!out.evals.empty()) {
      MoveEval last = out.evals.back();
      if (last.escalated()) {
        last.winrate_black = *last.initial_winrate_black;
        last.score_black = *last.initial_score_black;
      }
      prev_shallow = last;
    }
  }

  Query q;
  q.game_id = record.game_id;
  q.komi = record.komi;
  q.rules_label = rules_label;
  q.board_size = record.board_size;
  q.moves = &record.moves;
  const std::string moves_json = encode_moves(record.moves, record.board_size);

  auto ask = [&](int turn, int visits) {
    q.turn = turn;
    q.visits = visits;
    MoveEval e = decode_response(engine.exchange(encode_query(q, moves_json)), record.board_size);
    e.ordinal = turn;
    e.visits_used = visits;
    return e;
  };

  for (int k = static_cast<int>(out.evals.size()); k <= n; ++k) {
    try {
      MoveEval shallow = ask(k, policy.initial_visits);
      MoveEval kept = shallow;
      if (prev_shallow && needs_reeval(*prev_shallow, shallow, policy)) {
        kept = ask(k, policy.escalated_visits);
        kept.initial_winrate_black = shallow.winrate_black;
        kept.initial_score_black = shallow.score_black;
      }
      prev_shallow = shallow;
      out.evals.push_back(kept);
      if (on_eval) on_eval(kept);
    } catch (const EngineError& e) {
      throw EngineError(std::string(e.what()) + " (game " + record.game_id + ", ordinal " + std::to_string(k) + ")",
                        k - 1, e.resumable());
    }
  }
  return out;
}

// ---------------------------------------------------------------- jsonl

namespace {

json policy_json(const AnalysisPolicy& p) {
  return {{"initial_visits", p.initial_visits},
          {"escalated_visits", p.escalated_visits},
          {"winrate_jump", p.winrate_jump},
          {"score_jump", p.score_jump}};
}

json top_moves_json(const std::vector<TopMove>& moves) {
  json arr = json::array();
  for (const auto& t : moves) {
    json m;
    if (t.point) {
      m["col"] = t.point->col;
      m["row"] = t.point->row;
    } else {
      m["col"] = nullptr;
      m["row"] = nullptr;
    }
    m["visits"] = t.visits;
    arr.push_back(std::move(m));
  }
  return arr;
}

std::vector<TopMove> top_moves_from(const json& arr) {
  std::vector<TopMove> out;
  for (const auto& m : arr) {
    TopMove t;
    if (!m.at("col").is_null()) t.point = sgf::Point{m.at("col").get<int>(), m.at("row").get<int>()};
    t.visits = m.value("visits", 0);
    out.push_back(t);
  }
  return out;
}

}  // namespace

std::string header_line(const AnalyzedGame& g) {
  json h;
  h["game_id"] = g.game_id;
  h["komi"] = g.komi ? json(*g.komi) : json(nullptr);
  h["rules_label"] = g.rules_label;
  h["policy"] = policy_json(g.policy);
  return h.dump();
}

std::string eval_line(const MoveEval& e) {
  json j;
  j["ordinal"] = e.ordinal;
  j["winrate_black"] = quantize_winrate(e.winrate_black);
  j["score_black"] = quantize_score(e.score_black);
  j["visits_used"] = e.visits_used;
  j["top_moves"] = top_moves_json(e.top_moves);
  if (e.escalated())
    j["initial"] = {{"winrate_black", quantize_winrate(*e.initial_winrate_black)},
                    {"score_black", quantize_score(*e.initial_score_black)}};
  return j.dump();
}

std::string to_jsonl(const AnalyzedGame& g) {
  std::string out = header_line(g) + "\n";
  for (const auto& e : g.evals) out += eval_line(e) + "\n";
  return out;
}

AnalyzedGame parse_jsonl(std::string_view text) {
  AnalyzedGame g;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      // A torn last line from an interrupted run; everything before it stands.
      if (in.peek() == EOF) break;
      throw;
    }
    if (header) {
      g.game_id = j.at("game_id").get<std::string>();
      if (!j.at("komi").is_null()) g.komi = j["komi"].get<double>();
      g.rules_label = j.value("rules_label", "");
      const auto& p = j.at("policy");
      g.policy.initial_visits = p.at("initial_visits").get<int>();
      g.policy.escalated_visits = p.at("escalated_visits").get<int>();
      g.policy.winrate_jump = p.at("winrate_jump").get<double>();
      g.policy.score_jump = p.at("score_jump").get<double>();
      header = false;
      continue;
    }
    MoveEval e;
    e.ordinal = j.at("ordinal").get<int>();
    e.winrate_black = j.at("winrate_black").get<double>();
    e.score_black = j.at("score_black").get<double>();
    e.visits_used = j.at("visits_used").get<int>();
    e.top_moves = top_moves_from(j.at("top_moves"));
    if (j.contains("initial")) {
      e.initial_winrate_black = j["initial"].at("winrate_black").get<double>();
      e.initial_score_black = j["initial"].at("score_black").get<double>();
    }
    if (e.ordinal != static_cast<int>(g.evals.size()))
      throw std::runtime_error("analysis: ordinals not contiguous at " + std::to_string(e.ordinal));
    g.evals.push_back(std::move(e));
  }
  if (header) throw std::runtime_error("analysis: missing header line");
  return g;
}

MockEngine::Script parse_script(std::string_view json_text) {
  json j = json::parse(json_text);
  MockEngine::Script script;
  for (const auto& e : j.at("evals")) {
    MockEngine::ScriptedEval s;
    s.winrate_black = e.at("w").get<double>();
    s.score_black = e.at("s").get<double>();
    if (e.contains("ew")) s.escalated_winrate_black = e["ew"].get<double>();
    if (e.contains("es")) s.escalated_score_black = e["es"].get<double>();
    if (e.contains("top")) s.top_moves = top_moves_from(e["top"]);
    script.push_back(std::move(s));
  }
  return script;
}

std::string script_to_json(const std::string& game_id, const MockEngine::Script& script) {
  json evals = json::array();
  for (const auto& s : script) {
    json e;
    e["w"] = quantize_winrate(s.winrate_black);
    e["s"] = quantize_score(s.score_black);
    if (s.escalated_winrate_black) e["ew"] = quantize_winrate(*s.escalated_winrate_black);
    if (s.escalated_score_black) e["es"] = quantize_score(*s.escalated_score_black);
    e["top"] = top_moves_json(s.top_moves);
    evals.push_back(std::move(e));
  }
  json j;
  j["game_id"] = game_id;
  j["evals"] = std::move(evals);
  return j.dump() + "\n";
}

}  // namespace gostat::engine
