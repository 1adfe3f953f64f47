#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gostat/features.hpp"
#include "gostat/predict.hpp"
#include "gostat/rating.hpp"
#include "gostat/sgf.hpp"
#include "gostat/synth.hpp"
#include "gostat/workspace.hpp"

namespace py = pybind11;
namespace ws = gostat::workspace;
namespace fs = std::filesystem;
using namespace gostat;

namespace {

Date parse_date(const std::string& text) {
  auto d = Date::parse(text);
  if (!d) throw std::invalid_argument("bad date: " + text);
  return *d;
}

py::dict record_to_dict(const sgf::GameRecord& r) {
  py::dict d;
  d["game_id"] = r.game_id;
  d["black"] = r.black_name;
  d["white"] = r.white_name;
  d["result"] = r.result.to_sgf();
  d["komi"] = r.komi ? py::cast(*r.komi) : py::none();
  d["date"] = r.date ? py::cast(r.date->to_string()) : py::none();
  d["event"] = r.event;
  d["round"] = r.round;
  d["board_size"] = r.board_size;
  d["handicap"] = r.handicap;
  py::list moves;
  for (const auto& m : r.moves) {
    py::object point = m.point ? py::cast(std::make_pair(m.point->col, m.point->row)) : py::none();
    moves.append(py::make_tuple(std::string(1, sgf::color_letter(m.color)), point));
  }
  d["moves"] = moves;
  return d;
}

features::EvalSeries series(std::vector<double> winrate, std::vector<double> score) {
  if (winrate.size() != score.size()) throw std::invalid_argument("winrate and score differ in length");
  auto s = features::EvalSeries::from_values(std::move(winrate), std::move(score));
  s.validate();
  return s;
}

std::vector<rating::RatedGame> rated_games(const std::vector<std::tuple<std::string, std::string, std::string, double>>& rows) {
  std::vector<rating::RatedGame> out;
  for (const auto& [black, white, date, score] : rows) out.push_back({black, white, parse_date(date), score});
  return out;
}

py::dict history_to_dict(const rating::RatingHistory& h) {
  py::dict out;
  for (const auto& [id, points] : h.players) {
    py::list l;
    for (const auto& p : points) l.append(py::make_tuple(p.date.iso(), p.rating, p.uncertainty));
    out[py::str(id)] = l;
  }
  return out;
}

predict::AblationMask parse_mask(const std::string& text) {
  predict::AblationMask m{false, false, false};
  for (char c : text) {
    switch (c) {
      case 'M': m.meta = true; break;
      case 'C': m.contextual = true; break;
      case 'I': m.ingame = true; break;
      default: throw ws::UsageError("mask: use letters M, C, I (got " + text + ")");
    }
  }
  m.validate();
  return m;
}

py::tuple stage(const ws::StageResult& r) { return py::make_tuple(r.up_to_date, r.log); }

}  // namespace

PYBIND11_MODULE(_gostat, m) {
  m.attr("__version__") = ws::tool_version();

  static py::exception<ws::MissingDependency> missing(m, "MissingDependency", PyExc_RuntimeError);
  py::register_exception<ws::UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ws::DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<sgf::SgfError>(m, "SgfError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ws::MissingDependency& e) {
      missing(e.what());
    }
  });

  // SGF
  m.def("parse_sgf", [](const std::string& text) { return record_to_dict(sgf::parse_sgf(text)); }, py::arg("text"),
        "Parse one SGF game into a dict.");
  m.def("canonical_sgf", [](const std::string& text) { return sgf::serialize_sgf(sgf::parse_sgf(text)); },
        py::arg("text"), "Parse and re-serialize an SGF game in canonical form.");
  m.def("game_id", [](const std::string& text) { return sgf::compute_game_id(sgf::parse_sgf(text)); },
        py::arg("text"), "Content hash identifying a game.");

  // evaluation series
  m.def(
      "detect_garbage_moves",
      [](std::vector<double> winrate, std::vector<double> score, int window, double winrate_bar, double score_bar) {
        features::GmPolicy p{window, winrate_bar, score_bar};
        p.validate();
        auto r = features::detect_garbage_moves(series(std::move(winrate), std::move(score)), p);
        return py::make_tuple(r.start ? py::cast(*r.start) : py::none(), r.ratio);
      },
      py::arg("winrate"), py::arg("score"), py::arg("window") = 4, py::arg("winrate_bar") = 0.90,
      py::arg("score_bar") = 3.0,
      "Black-perspective winrate/score for positions 0..n. Returns (first garbage move or None, ratio).");
  m.def(
      "detect_unstable_rounds",
      [](std::vector<double> winrate, std::vector<double> score, double loss_winrate, double loss_score,
         double similarity_winrate, double similarity_score) {
        features::UrPolicy p{loss_winrate, loss_score, similarity_winrate, similarity_score};
        p.validate();
        return features::detect_unstable_rounds(series(std::move(winrate), std::move(score)), p);
      },
      py::arg("winrate"), py::arg("score"), py::arg("loss_winrate") = 0.10, py::arg("loss_score") = 5.0,
      py::arg("similarity_winrate") = 0.02, py::arg("similarity_score") = 1.0,
      "Move ordinals flagged as unstable rounds.");

  // ratings
  m.def("elo_expected", &rating::elo_expected, py::arg("r_a"), py::arg("r_b"));
  m.def(
      "elo_fit",
      [](const std::vector<std::tuple<std::string, std::string, std::string, double>>& games, double k) {
        return history_to_dict(rating::elo_fit(rated_games(games), {k, 1500.0}));
      },
      py::arg("games"), py::arg("k") = 20.0,
      "games: (black, white, 'YYYY-MM-DD', black_score). Returns {player: [(date, rating, sd)]}.");
  m.def(
      "whr_fit",
      [](const std::vector<std::tuple<std::string, std::string, std::string, double>>& games, double w2) {
        rating::WhrParams p;
        p.prior_variance_per_year = w2;
        p.validate();
        return history_to_dict(rating::whr_fit(rated_games(games), p));
      },
      py::arg("games"), py::arg("w2") = rating::WhrParams{}.prior_variance_per_year,
      "games: (black, white, 'YYYY-MM-DD', black_score). Returns {player: [(date, rating, sd)]} in natural units.");

  // metrics
  m.def(
      "evaluate_predictions",
      [](const std::vector<double>& p_black, const std::vector<int>& labels, const std::vector<std::string>& cats) {
        std::vector<catalog::RegionPair> rp;
        for (const auto& c : cats) {
          auto r = catalog::parse_region_pair(c);
          if (!r) throw std::invalid_argument("unknown region pair: " + c);
          rp.push_back(*r);
        }
        auto metrics = predict::evaluate(p_black, labels, rp);
        py::dict out;
        for (const auto& row : metrics.rows) {
          out[py::str(row.name)] = py::dict(py::arg("n") = row.n,
                                            py::arg("acc") = row.acc ? py::cast(*row.acc) : py::none(),
                                            py::arg("mse") = row.mse ? py::cast(*row.mse) : py::none());
        }
        return out;
      },
      py::arg("p_black"), py::arg("labels"), py::arg("categories"),
      "Accuracy and MSE overall and per region pair (CR, CHN, KOR, JPN, Others).");

  // workspace stages
  m.def(
      "synth",
      [](const fs::path& root, int players, int games, std::uint64_t seed, double mistake_rate, int min_moves,
         int max_moves) {
        synth::SyntheticSpec s;
        s.n_players = players;
        s.n_games = games;
        s.seed = seed;
        s.mistake_rate = mistake_rate;
        s.min_moves = min_moves;
        s.max_moves = max_moves;
        return stage(ws::synth(root, s));
      },
      py::arg("root"), py::arg("players") = 20, py::arg("games") = 300, py::arg("seed") = 7,
      py::arg("mistake_rate") = 0.3, py::arg("min_moves") = 120, py::arg("max_moves") = 300);
  m.def(
      "ingest",
      [](const fs::path& root, std::optional<fs::path> corpus) {
        ws::IngestOptions o;
        if (corpus) o.corpus = *corpus;
        return stage(ws::ingest(root, o));
      },
      py::arg("root"), py::arg("corpus") = py::none());
  m.def(
      "analyze",
      [](const fs::path& root, const std::string& engine, int workers) {
        ws::AnalyzeOptions o;
        o.engine = engine;
        o.workers = workers;
        ws::StageResult r;
        {
          py::gil_scoped_release release;
          r = ws::analyze(root, o);
        }
        return stage(r);
      },
      py::arg("root"), py::arg("engine"), py::arg("workers") = 1);
  m.def(
      "features",
      [](const fs::path& root, int workers) {
        ws::FeaturesOptions o;
        o.workers = workers;
        return stage(ws::build_features(root, o));
      },
      py::arg("root"), py::arg("workers") = 1);
  m.def(
      "rate",
      [](const fs::path& root, const std::vector<std::string>& systems) {
        ws::RateOptions o;
        o.systems.clear();
        for (const auto& s : systems) o.systems.push_back(rating::parse_system(s));
        return stage(ws::rate(root, o));
      },
      py::arg("root"), py::arg("systems") = std::vector<std::string>{"whr"});
  m.def(
      "train",
      [](const fs::path& root, const std::string& model, const std::string& mask) {
        ws::TrainOptions o;
        o.kind = predict::parse_model_kind(model);
        o.mask = parse_mask(mask);
        return stage(ws::train(root, o));
      },
      py::arg("root"), py::arg("model") = "gbdt", py::arg("mask") = "MCI");
  m.def(
      "evaluate",
      [](const fs::path& root, bool ablation) {
        ws::EvaluateOptions o;
        o.ablation = ablation;
        return stage(ws::evaluate(root, o));
      },
      py::arg("root"), py::arg("ablation") = true);
  m.def("report", [](const fs::path& root) { return stage(ws::report(root, {})); }, py::arg("root"));
  m.def("fingerprint", &ws::fingerprint, py::arg("root"));
  m.def("verify_manifest", &ws::verify_manifest, py::arg("root"),
        "Workspace files whose contents no longer match the manifest.");
}
