#include "gostat/sgf.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <utility>

#include "gostat/csv.hpp"
#include "gostat/hash.hpp"

namespace gostat::sgf {

namespace {

struct Property {
  std::string ident;
  std::vector<std::string> values;
  std::size_t offset = 0;  // first value's byte offset
};
using Node = std::vector<Property>;

// Recursive-descent reader for FF[4] collections. Nodes of the main line
// are collected; side variations are parsed for syntax and discarded.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Node> read_main_line() {
    skip_ws();
    if (at_end() || peek() != '(') fail("expected '('");
    std::vector<Node> nodes;
    read_tree(&nodes);
    return nodes;
  }

 private:
  void read_tree(std::vector<Node>* main_line) {
    expect('(');
    skip_ws();
    if (at_end() || peek() != ';') fail("expected ';' to open a node");
    while (true) {
      skip_ws();
      if (at_end()) fail("unterminated game tree");
      if (peek() != ';') break;
      Node node = read_node();
      if (main_line) main_line->push_back(std::move(node));
    }
    bool first_child = true;
    while (true) {
      skip_ws();
      if (at_end()) fail("unterminated game tree");
      if (peek() != '(') break;
      read_tree(first_child ? main_line : nullptr);
      first_child = false;
    }
    expect(')');
  }

  Node read_node() {
    expect(';');
    Node node;
    while (true) {
      skip_ws();
      if (at_end()) fail("unterminated node");
      char c = peek();
      if (!is_letter(c)) break;
      node.push_back(read_property());
    }
    return node;
  }

  Property read_property() {
    Property prop;
    std::size_t start = pos_;
    while (!at_end() && is_letter(peek())) {
      // FF[3] allowed lowercase letters inside identifiers; only capitals count.
      if (peek() >= 'A' && peek() <= 'Z') prop.ident.push_back(peek());
      ++pos_;
    }
    if (prop.ident.empty()) fail_at("property identifier has no capital letters", start);
    skip_ws();
    if (at_end() || peek() != '[') fail("expected '[' after property " + prop.ident);
    prop.offset = pos_;
    while (true) {
      skip_ws();
      if (at_end() || peek() != '[') break;
      prop.values.push_back(read_value());
    }
    return prop;
  }

  std::string read_value() {
    std::size_t open = pos_;
    expect('[');
    std::string value;
    while (true) {
      if (at_end()) fail_at("unterminated property value", open);
      char c = text_[pos_++];
      if (c == ']') break;
      if (c == '\\') {
        if (at_end()) fail_at("dangling escape", pos_ - 1);
        char n = text_[pos_++];
        if (n == '\r') {
          // soft line break, CRLF or CR
          if (!at_end() && peek() == '\n') ++pos_;
        } else if (n != '\n') {
          value.push_back(n);
        }
        continue;
      }
      if (c == '\r') {
        if (!at_end() && peek() == '\n') ++pos_;
        value.push_back('\n');
        continue;
      }
      value.push_back(c);
    }
    return value;
  }

  static bool is_letter(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void skip_ws() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r' ||
                         peek() == '\f' || peek() == '\v'))
      ++pos_;
  }
  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) { throw SgfError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) { throw SgfError(msg, at); }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view s) {
  s = trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string escape_value(std::string_view v) {
  std::string out;
  out.reserve(v.size());
  for (char c : v) {
    if (c == ']' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

const std::set<std::string, std::less<>> kTypedKeys = {"GM", "FF", "SZ", "PB", "PW", "RE",
                                                       "KM", "DT", "EV", "RO", "HA"};

}  // namespace

const char* result_kind_name(ResultKind kind) {
  switch (kind) {
    case ResultKind::PointsWin: return "points";
    case ResultKind::Resignation: return "resignation";
    case ResultKind::Forfeit: return "forfeit";
    case ResultKind::Timeout: return "timeout";
    case ResultKind::WinUnspecified: return "win";
    case ResultKind::Draw: return "draw";
    case ResultKind::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<GameResult> GameResult::parse(std::string_view text) {
  std::string t = upper(trim(text));
  GameResult r;
  if (t.empty()) return r;
  if (t == "0" || t == "DRAW" || t == "JIGO" || t == "D") {
    r.kind = ResultKind::Draw;
    return r;
  }
  if (t.size() < 2 || (t[0] != 'B' && t[0] != 'W') || t[1] != '+') return std::nullopt;
  r.winner = t[0] == 'B' ? Color::Black : Color::White;
  std::string_view how = std::string_view(t).substr(2);
  if (how.empty()) {
    r.kind = ResultKind::WinUnspecified;
  } else if (how == "R" || how == "RESIGN") {
    r.kind = ResultKind::Resignation;
  } else if (how == "T" || how == "TIME") {
    r.kind = ResultKind::Timeout;
  } else if (how == "F" || how == "FORFEIT") {
    r.kind = ResultKind::Forfeit;
  } else if (auto m = parse_number(how); m && *m > 0) {
    r.kind = ResultKind::PointsWin;
    r.margin = *m;
  } else {
    return std::nullopt;
  }
  return r;
}

std::string GameResult::to_sgf() const {
  std::string side = winner ? std::string(1, color_letter(*winner)) + "+" : "";
  switch (kind) {
    case ResultKind::PointsWin: return side + format_shortest(margin);
    case ResultKind::Resignation: return side + "R";
    case ResultKind::Forfeit: return side + "F";
    case ResultKind::Timeout: return side + "T";
    case ResultKind::WinUnspecified: return side;
    case ResultKind::Draw: return "0";
    case ResultKind::Unknown: return "";
  }
  return "";
}

std::optional<Point> point_from_sgf(std::string_view token) {
  if (token.empty() || token == "tt") return std::nullopt;
  if (token.size() != 2) throw CoordinateError("coordinate must be two letters: '" + std::string(token) + "'");
  auto axis = [&](char c) {
    if (c < 'a' || c > 's')
      throw CoordinateError("coordinate letter outside a-s: '" + std::string(token) + "'");
    return c - 'a';
  };
  return Point{axis(token[0]), axis(token[1])};
}

std::string point_to_sgf(const std::optional<Point>& point) {
  if (!point) return "";
  if (point->col < 0 || point->col > 18 || point->row < 0 || point->row > 18)
    throw CoordinateError("point outside 19x19");
  return {static_cast<char>('a' + point->col), static_cast<char>('a' + point->row)};
}

GameRecord parse_sgf(std::string_view text, ParseDiagnostics* diag) {
  ParseDiagnostics local;
  ParseDiagnostics& d = diag ? *diag : local;
  std::vector<Node> nodes = Reader(text).read_main_line();

  GameRecord rec;
  bool size_seen = false;
  auto warn = [&](std::string msg) { d.warnings.push_back(std::move(msg)); };
  auto keep_raw = [&](const Property& p) {
    for (const auto& v : p.values) rec.raw_properties.emplace(p.ident, v);
  };

  // Root properties first so SZ is known before moves are checked.
  if (!nodes.empty()) {
    for (const Property& p : nodes.front()) {
      const std::string& v = p.values.front();
      if (p.ident == "B" || p.ident == "W") continue;
      if (p.ident == "GM" || p.ident == "FF") {
        if (p.ident == "GM" && trim(v) != "1") warn("GM is not 1 (Go)");
      } else if (p.ident == "SZ") {
        std::string_view sz = trim(v);
        auto colon = sz.find(':');
        auto n = parse_int(sz.substr(0, colon));
        if (!n || *n < 1 || *n > 52) throw SgfError("invalid SZ value", p.offset);
        rec.board_size = *n;
        if (colon != std::string_view::npos) {
          auto m = parse_int(sz.substr(colon + 1));
          if (!m || *m != *n) throw SgfError("rectangular boards are not supported", p.offset);
        }
        size_seen = true;
      } else if (p.ident == "PB") {
        rec.black_name = v;
      } else if (p.ident == "PW") {
        rec.white_name = v;
      } else if (p.ident == "EV") {
        rec.event = v;
      } else if (p.ident == "RO") {
        rec.round = v;
      } else if (p.ident == "KM") {
        if (auto k = parse_number(v)) rec.komi = *k;
        else { warn("unparseable KM kept raw"); keep_raw(p); }
      } else if (p.ident == "HA") {
        if (auto h = parse_int(v); h && *h >= 0) rec.handicap = *h;
        else { warn("unparseable HA kept raw"); keep_raw(p); }
      } else if (p.ident == "DT") {
        if (auto dt = Date::parse(v)) rec.date = *dt;
        else { warn("unparseable DT kept raw"); keep_raw(p); }
      } else if (p.ident == "RE") {
        if (auto r = GameResult::parse(v)) rec.result = *r;
        else keep_raw(p);
      } else {
        keep_raw(p);
      }
    }
  }
  if (!size_seen) rec.board_size = 19;
  if (rec.board_size != 19) {
    d.nonstandard_board = true;
    warn("nonstandard board size " + std::to_string(rec.board_size));
  }
  if (!rec.date) d.dateless = true;

  int ordinal = 0;
  for (const Node& node : nodes) {
    for (const Property& p : node) {
      if (p.ident != "B" && p.ident != "W") continue;
      std::optional<Point> pt;
      try {
        pt = point_from_sgf(trim(p.values.front()));
      } catch (const CoordinateError& e) {
        throw SgfError(e.what(), p.offset);
      }
      if (pt && (pt->col >= rec.board_size || pt->row >= rec.board_size))
        throw SgfError("move outside the board", p.offset);
      Move m;
      m.color = p.ident == "B" ? Color::Black : Color::White;
      m.point = pt;
      m.ordinal = ++ordinal;
      rec.moves.push_back(m);
    }
  }
  for (std::size_t i = 0; i < rec.moves.size(); ++i) {
    Color expected = (i % 2 == 0) == (rec.handicap == 0) ? Color::Black : Color::White;
    if (rec.moves[i].color != expected) {
      d.colors_alternate = false;
      warn("move " + std::to_string(i + 1) + " breaks color alternation");
      break;
    }
  }
  rec.game_id = compute_game_id(rec);
  return rec;
}

std::string serialize_sgf(const GameRecord& rec) {
  std::multimap<std::string, std::string> props = rec.raw_properties;
  auto put = [&](const char* key, const std::string& value) {
    props.erase(key);
    props.emplace(key, value);
  };
  for (const auto& key : kTypedKeys) {
    if (key != "RE" && key != "KM" && key != "HA" && key != "DT") props.erase(key);
  }
  if (!rec.black_name.empty()) put("PB", rec.black_name);
  if (!rec.white_name.empty()) put("PW", rec.white_name);
  if (!rec.event.empty()) put("EV", rec.event);
  if (!rec.round.empty()) put("RO", rec.round);
  if (rec.komi) put("KM", format_shortest(*rec.komi));
  if (rec.handicap > 0) put("HA", std::to_string(rec.handicap));
  if (rec.date) put("DT", rec.date->to_string());
  if (rec.result.kind != ResultKind::Unknown) put("RE", rec.result.to_sgf());

  std::string out = "(;GM[1]FF[4]SZ[" + std::to_string(rec.board_size) + "]";
  std::string last_key;
  for (const auto& [key, value] : props) {
    if (key != last_key) out += key;
    out += "[" + escape_value(value) + "]";
    last_key = key;
  }
  for (const Move& m : rec.moves) {
    out += ';';
    out += color_letter(m.color);
    out += "[" + point_to_sgf(m.point) + "]";
  }
  out += ")";
  return out;
}

std::string compute_game_id(const GameRecord& record) {
  return sha256_hex(serialize_sgf(record)).substr(0, 16);
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    if (c < 0x80) extra = 0;
    else if ((c & 0xE0) == 0xC0 && c >= 0xC2) extra = 1;
    else if ((c & 0xF0) == 0xE0) extra = 2;
    else if ((c & 0xF8) == 0xF0 && c <= 0xF4) extra = 3;
    else return false;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) return false;
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += static_cast<std::size_t>(extra) + 1;
  }
  return true;
}

std::string latin1_to_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (char ch : bytes) {
    auto c = static_cast<unsigned char>(ch);
    if (c < 0x80) {
      out.push_back(ch);
    } else {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::string read_sgf_text(const std::filesystem::path& path, ParseDiagnostics* diag) {
  std::string bytes = read_file(path);
  if (bytes.size() >= 3 && bytes.compare(0, 3, "\xEF\xBB\xBF") == 0) bytes.erase(0, 3);
  if (is_valid_utf8(bytes)) return bytes;
  if (diag) {
    diag->latin1_fallback = true;
    diag->warnings.push_back(path.filename().string() + ": not UTF-8, decoded as Latin-1");
  }
  return latin1_to_utf8(bytes);
}

GameRecord load_sgf_file(const std::filesystem::path& path, ParseDiagnostics* diag) {
  ParseDiagnostics local;
  ParseDiagnostics& d = diag ? *diag : local;
  return parse_sgf(read_sgf_text(path, &d), &d);
}

}  // namespace gostat::sgf
