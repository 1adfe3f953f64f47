#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gostat/date.hpp"

namespace gostat::sgf {

enum class Color { Black, White };

inline Color opponent(Color c) { return c == Color::Black ? Color::White : Color::Black; }
inline char color_letter(Color c) { return c == Color::Black ? 'B' : 'W'; }

struct Point {
  int col = 0;
  int row = 0;
  bool operator==(const Point&) const = default;
};

// Empty point = pass.
struct Move {
  Color color = Color::Black;
  std::optional<Point> point;
  int ordinal = 1;

  bool is_pass() const { return !point.has_value(); }
  bool operator==(const Move&) const = default;
};

enum class ResultKind { PointsWin, Resignation, Forfeit, Timeout, WinUnspecified, Draw, Unknown };

struct GameResult {
  ResultKind kind = ResultKind::Unknown;
  std::optional<Color> winner;  // set for every winning kind
  double margin = 0.0;          // > 0 only for PointsWin

  bool has_winner() const { return winner.has_value(); }
  bool operator==(const GameResult&) const = default;

  // Parses an RE[] value. Unrecognized text yields nullopt.
  static std::optional<GameResult> parse(std::string_view text);
  // Canonical RE[] text; empty for Unknown.
  std::string to_sgf() const;
};

const char* result_kind_name(ResultKind kind);

struct GameRecord {
  std::string game_id;
  std::string black_name;
  std::string white_name;
  GameResult result;
  std::optional<double> komi;
  std::optional<Date> date;
  std::string event;
  std::string round;
  int board_size = 19;
  int handicap = 0;
  std::vector<Move> moves;
  std::multimap<std::string, std::string> raw_properties;

  bool nonstandard_board() const { return board_size != 19; }
  bool has_setup_stones() const {
    return raw_properties.contains("AB") || raw_properties.contains("AW");
  }
  bool operator==(const GameRecord&) const = default;
};

// Problems that do not stop a parse.
struct ParseDiagnostics {
  std::vector<std::string> warnings;
  bool nonstandard_board = false;
  bool dateless = false;
  bool latin1_fallback = false;
  bool colors_alternate = true;
};

class SgfError : public std::runtime_error {
 public:
  SgfError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class CoordinateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// "aa" -> (0,0); "" or "tt" -> pass (nullopt). Letters outside a-s throw.
std::optional<Point> point_from_sgf(std::string_view token);
// Inverse of point_from_sgf; pass is written as "".
std::string point_to_sgf(const std::optional<Point>& point);

// Parses the first game tree; only the main line is kept.
GameRecord parse_sgf(std::string_view text, ParseDiagnostics* diag = nullptr);

// Canonical single-line FF[4]: GM, FF, SZ first, then every other root
// property sorted by identifier, then one node per move.
std::string serialize_sgf(const GameRecord& record);

// Content hash of serialize_sgf(record); independent of record.game_id.
std::string compute_game_id(const GameRecord& record);

// Reads a file as UTF-8, re-decoding as Latin-1 when it is not valid UTF-8.
std::string read_sgf_text(const std::filesystem::path& path, ParseDiagnostics* diag = nullptr);
GameRecord load_sgf_file(const std::filesystem::path& path, ParseDiagnostics* diag = nullptr);

bool is_valid_utf8(std::string_view bytes);
std::string latin1_to_utf8(std::string_view bytes);

}  // namespace gostat::sgf
