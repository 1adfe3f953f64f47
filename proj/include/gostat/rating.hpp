#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gostat/csv.hpp"
#include "gostat/date.hpp"

namespace gostat::rating {

enum class System { Elo, TrueSkill, Whr };
std::string to_string(System s);
System parse_system(std::string_view s);

struct RatedGame {
  std::string black_id;
  std::string white_id;
  Date date;
  double black_score = 1.0;  // 1, 0.5 or 0
};

struct RatingPoint {
  Date date;
  double rating = 0.0;
  double uncertainty = 0.0;
  bool operator==(const RatingPoint&) const = default;
};

struct RatingHistory {
  System system = System::Elo;
  std::map<std::string, double> params;
  std::map<std::string, std::vector<RatingPoint>> players;
  std::optional<Date> last_game;
  bool converged = true;
  double max_residual = 0.0;
  int iterations = 0;

  bool operator==(const RatingHistory&) const = default;
};

// ---- Elo

struct EloParams {
  double k = 20.0;
  double initial = 1500.0;
};

double elo_expected(double r_a, double r_b);
std::pair<double, double> elo_update(double r_a, double r_b, double outcome_a, double k);
RatingHistory elo_fit(std::span<const RatedGame> games, const EloParams& params = {});

// ---- TrueSkill, two players

struct Gaussian {
  double mu = 25.0;
  double sigma = 25.0 / 3.0;
};

struct TrueSkillParams {
  double mu = 25.0;
  double sigma = 25.0 / 3.0;
  double beta = 25.0 / 6.0;
  double tau = 25.0 / 300.0;
  double draw_prob = 0.0;

  void validate() const;
  double draw_margin() const;
};

double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

// outcome_a: 1 = a wins, 0 = b wins, 0.5 = draw (needs draw_prob > 0).
std::pair<Gaussian, Gaussian> trueskill_update_1v1(Gaussian a, Gaussian b, double outcome_a,
                                                   const TrueSkillParams& params = {});
double trueskill_win_probability(Gaussian a, Gaussian b, const TrueSkillParams& params = {});
// Draws are skipped when draw_prob is 0.
RatingHistory trueskill_fit(std::span<const RatedGame> games, const TrueSkillParams& params = {});

// ---- Whole-history rating, natural units

struct WhrParams {
  double prior_variance_per_year = 0.20;
  double prior_center = 0.0;
  double prior_sd_initial = 2.0;
  int max_newton_iters = 50;
  double convergence_tol = 1e-4;
  double elo_scale = 173.71779276130073;  // 400 / ln 10

  void validate() const;
};

RatingHistory whr_fit(std::span<const RatedGame> games, const WhrParams& params = {});

// Latest point on or before `asof`; for WHR the uncertainty grows with the
// drift variance since that point. A player absent from the history gets
// the system's fresh-player rating.
RatingPoint rating_at(const RatingHistory& history, const std::string& player_id, const Date& asof);
bool has_player(const RatingHistory& history, const std::string& player_id);

// Probability black wins. Throws std::invalid_argument when asof is not
// strictly after the last game in the history. Unknown players: 0.5.
double rating_predict(const RatingHistory& history, const std::string& black_id, const std::string& white_id,
                      const Date& asof);

// ratings.csv rows: system, player_id, date, rating, uncertainty.
CsvTable ratings_to_csv(const RatingHistory& history);
std::string params_to_json(const RatingHistory& history);

}  // namespace gostat::rating
