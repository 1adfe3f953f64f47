#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gostat/sgf.hpp"

namespace gostat::engine {

struct TopMove {
  std::optional<sgf::Point> point;  // empty = pass
  int visits = 0;
  bool operator==(const TopMove&) const = default;
};

// Engine statistics for the position after move `ordinal` (0 = empty board).
// Always black-perspective.
struct MoveEval {
  int ordinal = 0;
  double winrate_black = 0.5;
  double score_black = 0.0;
  std::vector<TopMove> top_moves;
  int visits_used = 0;
  // Shallow-search values, kept when the position was re-queried.
  std::optional<double> initial_winrate_black;
  std::optional<double> initial_score_black;

  bool escalated() const { return initial_winrate_black.has_value(); }
  bool operator==(const MoveEval&) const = default;
};

struct AnalysisPolicy {
  int initial_visits = 100;
  int escalated_visits = 1000;
  double winrate_jump = 0.10;
  double score_jump = 5.0;

  void validate() const;
  bool operator==(const AnalysisPolicy&) const = default;
};

struct AnalyzedGame {
  std::string game_id;
  std::optional<double> komi;
  std::string rules_label;
  AnalysisPolicy policy;
  std::vector<MoveEval> evals;  // |moves| + 1 when complete

  bool operator==(const AnalyzedGame&) const = default;
};

// Strictly greater than either threshold.
bool needs_reeval(const MoveEval& prev, const MoveEval& cur, const AnalysisPolicy& policy);

class EngineError : public std::runtime_error {
 public:
  EngineError(const std::string& what, int last_completed_ordinal = -1, bool resumable = true)
      : std::runtime_error(what), last_completed_(last_completed_ordinal), resumable_(resumable) {}
  int last_completed_ordinal() const { return last_completed_; }
  bool resumable() const { return resumable_; }

 private:
  int last_completed_;
  bool resumable_;
};

// Line-delimited JSON request/response over one in-flight query.
class Engine {
 public:
  virtual ~Engine() = default;
  virtual std::string exchange(const std::string& request_line) = 0;
};

struct Query {
  std::string game_id;
  std::optional<double> komi;
  std::string rules_label;
  int board_size = 19;
  const std::vector<sgf::Move>* moves = nullptr;
  int turn = 0;
  int visits = 100;
};

std::string gtp_vertex(const std::optional<sgf::Point>& point, int board_size);
std::optional<sgf::Point> parse_gtp_vertex(std::string_view vertex, int board_size);

std::string encode_moves(const std::vector<sgf::Move>& moves, int board_size);
std::string encode_query(const Query& q);
// Same request with a pre-encoded move list.
std::string encode_query(const Query& q, std::string_view moves_json);
// Throws EngineError (non-resumable) for error responses.
MoveEval decode_response(std::string_view line, int board_size);

// Rounds to the precision stored on disk (6 decimals winrate, 2 decimals score).
double quantize_winrate(double w);
double quantize_score(double s);

// Deterministic stand-in for an analysis engine that speaks the same protocol.
class MockEngine : public Engine {
 public:
  struct ScriptedEval {
    double winrate_black = 0.5;
    double score_black = 0.0;
    std::vector<TopMove> top_moves;
    std::optional<double> escalated_winrate_black;
    std::optional<double> escalated_score_black;
  };
  using Script = std::vector<ScriptedEval>;

  // Seeded random walk for every game.
  explicit MockEngine(std::uint64_t seed);
  // Scripted games by game_id; other games fall back to the seed when given.
  MockEngine(std::map<std::string, Script> scripts, std::optional<std::uint64_t> fallback_seed);
  // One table answering for every game id.
  static MockEngine from_table(Script table);

  std::string exchange(const std::string& request_line) override;
  std::size_t queries() const { return queries_; }

 private:
  std::optional<std::uint64_t> seed_;
  std::map<std::string, Script> scripts_;
  std::optional<Script> table_;
  std::size_t queries_ = 0;
  std::map<std::string, std::vector<double>> walks_;  // cached prefix of each game's walk
};

// Runs `sh -c command` and talks to it over stdin/stdout.
class ProcessEngine : public Engine {
 public:
  explicit ProcessEngine(std::string command, std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~ProcessEngine() override;
  ProcessEngine(const ProcessEngine&) = delete;
  ProcessEngine& operator=(const ProcessEngine&) = delete;

  // On timeout the process is restarted and the query retried once, then EngineError.
  std::string exchange(const std::string& request_line) override;

 private:
  std::optional<std::string> read_reply(std::string_view id);
  void start();
  void stop(bool hung = false);

  std::string command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// "mock:seed=N" or "cmd:<shell command>".
std::unique_ptr<Engine> make_engine(std::string_view spec, std::map<std::string, MockEngine::Script> scripts = {},
                                    std::chrono::milliseconds timeout = std::chrono::seconds(60));

using EvalSink = std::function<void(const MoveEval&)>;

// Every position at initial visits; a position whose shallow evaluation
// jumps from the previous position's shallow evaluation is re-queried at
// escalated visits and the deep result kept. Finished ordinals in `resume`
// are not queried again.
AnalyzedGame evaluate_game(const sgf::GameRecord& record, Engine& engine, const AnalysisPolicy& policy,
                           const std::string& rules_label = "japanese", const AnalyzedGame* resume = nullptr,
                           const EvalSink& on_eval = {});

// analysis/{game_id}.jsonl: header object, then one MoveEval per line.
std::string header_line(const AnalyzedGame& game);
std::string eval_line(const MoveEval& eval);
std::string to_jsonl(const AnalyzedGame& game);
AnalyzedGame parse_jsonl(std::string_view text);

MockEngine::Script parse_script(std::string_view json_text);
std::string script_to_json(const std::string& game_id, const MockEngine::Script& script);

}  // namespace gostat::engine
