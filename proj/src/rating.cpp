#include "gostat/rating.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace gostat::rating {

std::string to_string(System s) {
  switch (s) {
    case System::Elo: return "elo";
    case System::TrueSkill: return "trueskill";
    case System::Whr: return "whr";
  }
  return "?";
}

System parse_system(std::string_view s) {
  if (s == "elo") return System::Elo;
  if (s == "trueskill") return System::TrueSkill;
  if (s == "whr") return System::Whr;
  throw std::invalid_argument("unknown rating system '" + std::string(s) + "'");
}

namespace {

void check_score(double s) {
  if (s != 0.0 && s != 0.5 && s != 1.0) throw std::invalid_argument("game score must be 0, 0.5 or 1");
}

// One point per player per day; later games on the same day overwrite.
void record(RatingHistory& h, const std::string& id, const Date& date, double r, double u) {
  auto& pts = h.players[id];
  if (!pts.empty() && pts.back().date.days() == date.days()) pts.back() = RatingPoint{date, r, u};
  else pts.push_back(RatingPoint{date, r, u});
}

void note_last(RatingHistory& h, const Date& d) {
  if (!h.last_game || *h.last_game < d) h.last_game = d;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------- Elo

double elo_expected(double r_a, double r_b) { return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0)); }

std::pair<double, double> elo_update(double r_a, double r_b, double outcome_a, double k) {
  if (!(k > 0)) throw std::invalid_argument("Elo k must be positive");
  double delta = k * (outcome_a - elo_expected(r_a, r_b));
  return {r_a + delta, r_b - delta};
}

RatingHistory elo_fit(std::span<const RatedGame> games, const EloParams& params) {
  RatingHistory h;
  h.system = System::Elo;
  h.params = {{"k", params.k}, {"initial", params.initial}};
  std::map<std::string, double> current;
  auto get = [&](const std::string& id) {
    auto [it, fresh] = current.try_emplace(id, params.initial);
    return it->second;
  };
  for (const auto& g : games) {
    check_score(g.black_score);
    auto [rb, rw] = elo_update(get(g.black_id), get(g.white_id), g.black_score, params.k);
    current[g.black_id] = rb;
    current[g.white_id] = rw;
    record(h, g.black_id, g.date, rb, 0.0);
    record(h, g.white_id, g.date, rw, 0.0);
    note_last(h, g.date);
  }
  return h;
}

// ---------------------------------------------------------------- TrueSkill

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0 && p < 1)) throw std::invalid_argument("quantile outside (0,1)");
  // Acklam's rational approximation, polished with two Newton steps.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - 0.02425) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  for (int i = 0; i < 2; ++i) x -= (normal_cdf(x) - p) / normal_pdf(x);
  return x;
}

void TrueSkillParams::validate() const {
  if (!(sigma > 0) || !(beta > 0) || tau < 0) throw std::invalid_argument("TrueSkill sigma/beta must be positive");
  if (!(draw_prob >= 0 && draw_prob < 1)) throw std::invalid_argument("draw_prob must lie in [0,1)");
}

double TrueSkillParams::draw_margin() const {
  validate();
  if (draw_prob == 0) return 0.0;
  return normal_quantile((draw_prob + 1) / 2) * std::numbers::sqrt2 * beta;
}

std::pair<Gaussian, Gaussian> trueskill_update_1v1(Gaussian a, Gaussian b, double outcome_a,
                                                   const TrueSkillParams& params) {
  check_score(outcome_a);
  if (!(a.sigma > 0) || !(b.sigma > 0)) throw std::invalid_argument("sigma must be positive");
  double eps = params.draw_margin();
  double var_a = a.sigma * a.sigma + params.tau * params.tau;
  double var_b = b.sigma * b.sigma + params.tau * params.tau;
  double c2 = 2 * params.beta * params.beta + var_a + var_b;
  double c = std::sqrt(c2);

  double v, w;
  if (outcome_a == 0.5) {
    if (eps == 0) throw std::invalid_argument("a draw needs draw_prob > 0");
    double t = (a.mu - b.mu) / c, e = eps / c;
    double denom = normal_cdf(e - t) - normal_cdf(-e - t);
    v = (normal_pdf(-e - t) - normal_pdf(e - t)) / denom;
    w = v * v + ((e - t) * normal_pdf(e - t) + (e + t) * normal_pdf(e + t)) / denom;
    // v is signed for the a-minus-b difference here
    Gaussian na{a.mu + var_a / c * v, std::sqrt(var_a * (1 - var_a / c2 * w))};
    Gaussian nb{b.mu - var_b / c * v, std::sqrt(var_b * (1 - var_b / c2 * w))};
    return {na, nb};
  }
  bool a_wins = outcome_a == 1.0;
  double t = (a_wins ? a.mu - b.mu : b.mu - a.mu) / c;
  double e = eps / c;
  double cdf = normal_cdf(t - e);
  // far tails: use the asymptotic ratio to avoid 0/0
  v = cdf > 1e-300 ? normal_pdf(t - e) / cdf : -(t - e);
  w = v * (v + t - e);
  double sign = a_wins ? 1.0 : -1.0;
  Gaussian na{a.mu + sign * var_a / c * v, std::sqrt(var_a * (1 - var_a / c2 * w))};
  Gaussian nb{b.mu - sign * var_b / c * v, std::sqrt(var_b * (1 - var_b / c2 * w))};
  return {na, nb};
}

double trueskill_win_probability(Gaussian a, Gaussian b, const TrueSkillParams& params) {
  double denom = std::sqrt(2 * params.beta * params.beta + a.sigma * a.sigma + b.sigma * b.sigma);
  return normal_cdf((a.mu - b.mu) / denom);
}

RatingHistory trueskill_fit(std::span<const RatedGame> games, const TrueSkillParams& params) {
  params.validate();
  RatingHistory h;
  h.system = System::TrueSkill;
  h.params = {{"mu", params.mu},     {"sigma", params.sigma},         {"beta", params.beta},
              {"tau", params.tau},   {"draw_prob", params.draw_prob}};
  std::map<std::string, Gaussian> current;
  auto get = [&](const std::string& id) { return current.try_emplace(id, Gaussian{params.mu, params.sigma}).first->second; };
  for (const auto& g : games) {
    check_score(g.black_score);
    note_last(h, g.date);
    Gaussian b = get(g.black_id), w = get(g.white_id);
    if (g.black_score == 0.5 && params.draw_prob == 0) {
      record(h, g.black_id, g.date, b.mu, b.sigma);
      record(h, g.white_id, g.date, w.mu, w.sigma);
      continue;
    }
    auto [nb, nw] = trueskill_update_1v1(b, w, g.black_score, params);
    current[g.black_id] = nb;
    current[g.white_id] = nw;
    record(h, g.black_id, g.date, nb.mu, nb.sigma);
    record(h, g.white_id, g.date, nw.mu, nw.sigma);
  }
  return h;
}

// ---------------------------------------------------------------- WHR

void WhrParams::validate() const {
  if (!(prior_variance_per_year > 0) || !(prior_sd_initial > 0) || max_newton_iters <= 0 || !(convergence_tol > 0) ||
      !(elo_scale > 0))
    throw std::invalid_argument("WHR parameters must be positive");
}

namespace {

struct WhrNode {
  int day = 0;
  double r = 0.0;
  // (opponent node, score for this player)
  std::vector<std::pair<std::size_t, double>> games;
};

struct WhrPlayer {
  std::vector<std::size_t> nodes;  // global node indices, ascending day
};

// Tridiagonal system of -H for one player: diag d, off-diagonal e (symmetric).
struct Tridiag {
  std::vector<double> d, e, g;  // g = gradient of the log posterior
};

Tridiag build_system(const WhrPlayer& p, const std::vector<WhrNode>& nodes, const WhrParams& params) {
  std::size_t n = p.nodes.size();
  Tridiag t;
  t.d.assign(n, 0.0);
  t.e.assign(n > 0 ? n - 1 : 0, 0.0);
  t.g.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const WhrNode& node = nodes[p.nodes[i]];
    for (const auto& [opp, score] : node.games) {
      double s = logistic(node.r - nodes[opp].r);
      t.g[i] += score - s;
      t.d[i] += s * (1 - s);
    }
  }
  double v0 = params.prior_sd_initial * params.prior_sd_initial;
  const WhrNode& first = nodes[p.nodes[0]];
  t.g[0] -= (first.r - params.prior_center) / v0;
  t.d[0] += 1.0 / v0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const WhrNode& a = nodes[p.nodes[i]];
    const WhrNode& b = nodes[p.nodes[i + 1]];
    double v = params.prior_variance_per_year * (b.day - a.day) / 365.25;
    double diff = (b.r - a.r) / v;
    t.g[i] += diff;
    t.g[i + 1] -= diff;
    t.d[i] += 1.0 / v;
    t.d[i + 1] += 1.0 / v;
    t.e[i] -= 1.0 / v;
  }
  return t;
}

// Solves (-H) x = g by the Thomas algorithm.
std::vector<double> solve(const Tridiag& t) {
  std::size_t n = t.d.size();
  std::vector<double> c(n, 0.0), y(n, 0.0), x(n, 0.0);
  double denom = t.d[0];
  c[0] = n > 1 ? t.e[0] / denom : 0.0;
  y[0] = t.g[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = t.d[i] - t.e[i - 1] * c[i - 1];
    c[i] = i + 1 < n ? t.e[i] / denom : 0.0;
    y[i] = (t.g[i] - t.e[i - 1] * y[i - 1]) / denom;
  }
  x[n - 1] = y[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = y[i] - c[i] * x[i + 1];
  return x;
}

// Diagonal of (-H)^-1 from forward and backward pivots.
std::vector<double> inverse_diagonal(const Tridiag& t) {
  std::size_t n = t.d.size();
  std::vector<double> fwd(n), bwd(n), out(n);
  fwd[0] = t.d[0];
  for (std::size_t i = 1; i < n; ++i) fwd[i] = t.d[i] - t.e[i - 1] * t.e[i - 1] / fwd[i - 1];
  bwd[n - 1] = t.d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) bwd[i] = t.d[i] - t.e[i] * t.e[i] / bwd[i + 1];
  for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (fwd[i] + bwd[i] - t.d[i]);
  return out;
}

}  // namespace

RatingHistory whr_fit(std::span<const RatedGame> games, const WhrParams& params) {
  params.validate();
  RatingHistory h;
  h.system = System::Whr;
  h.params = {{"prior_variance_per_year", params.prior_variance_per_year},
              {"prior_center", params.prior_center},
              {"prior_sd_initial", params.prior_sd_initial},
              {"max_newton_iters", params.max_newton_iters},
              {"convergence_tol", params.convergence_tol},
              {"elo_scale", params.elo_scale}};

  std::map<std::string, std::map<int, std::size_t>> index;  // player -> day -> node
  for (const auto& g : games) {
    check_score(g.black_score);
    if (g.black_id == g.white_id) throw std::invalid_argument("player cannot play themself: " + g.black_id);
    index[g.black_id][g.date.days()];
    index[g.white_id][g.date.days()];
    note_last(h, g.date);
  }
  std::vector<WhrNode> nodes;
  std::vector<WhrPlayer> players;
  std::vector<std::string> ids;
  for (auto& [id, days] : index) {
    WhrPlayer p;
    for (auto& [day, node] : days) {
      node = nodes.size();
      nodes.push_back(WhrNode{day, params.prior_center, {}});
      p.nodes.push_back(node);
    }
    players.push_back(std::move(p));
    ids.push_back(id);
  }
  for (const auto& g : games) {
    std::size_t b = index[g.black_id][g.date.days()];
    std::size_t w = index[g.white_id][g.date.days()];
    nodes[b].games.emplace_back(w, g.black_score);
    nodes[w].games.emplace_back(b, 1.0 - g.black_score);
  }

  h.converged = players.empty();
  for (int iter = 1; iter <= params.max_newton_iters && !players.empty(); ++iter) {
    double max_step = 0.0;
    for (const auto& p : players) {
      std::vector<double> step = solve(build_system(p, nodes, params));
      for (std::size_t i = 0; i < step.size(); ++i) {
        nodes[p.nodes[i]].r += step[i];
        max_step = std::max(max_step, std::abs(step[i]));
      }
    }
    // Uniform shifts leave every game likelihood and drift term unchanged;
    // only the first-day priors pin them, so the sweeps crawl along that
    // direction. Take the exact optimum along it.
    double shift = 0.0;
    for (const auto& p : players) shift += params.prior_center - nodes[p.nodes[0]].r;
    shift /= static_cast<double>(players.size());
    for (auto& node : nodes) node.r += shift;
    max_step = std::max(max_step, std::abs(shift));
    h.iterations = iter;
    h.max_residual = max_step;
    if (max_step < params.convergence_tol) {
      h.converged = true;
      break;
    }
  }

  for (std::size_t k = 0; k < players.size(); ++k) {
    const auto& p = players[k];
    std::vector<double> var = inverse_diagonal(build_system(p, nodes, params));
    auto& pts = h.players[ids[k]];
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
      const WhrNode& node = nodes[p.nodes[i]];
      pts.push_back(RatingPoint{Date::from_days(node.day), node.r, std::sqrt(var[i])});
    }
  }
  return h;
}

// ---------------------------------------------------------------- queries

bool has_player(const RatingHistory& history, const std::string& player_id) {
  return history.players.count(player_id) > 0;
}

RatingPoint rating_at(const RatingHistory& history, const std::string& player_id, const Date& asof) {
  auto fresh = [&]() {
    switch (history.system) {
      case System::Elo: return RatingPoint{asof, history.params.at("initial"), 0.0};
      case System::TrueSkill: return RatingPoint{asof, history.params.at("mu"), history.params.at("sigma")};
      case System::Whr:
        return RatingPoint{asof, history.params.at("prior_center"), history.params.at("prior_sd_initial")};
    }
    return RatingPoint{};
  };
  auto it = history.players.find(player_id);
  if (it == history.players.end()) return fresh();
  const auto& pts = it->second;
  auto after = std::upper_bound(pts.begin(), pts.end(), asof.days(),
                                [](int day, const RatingPoint& p) { return day < p.date.days(); });
  if (after == pts.begin()) return fresh();
  RatingPoint p = *std::prev(after);
  if (history.system == System::Whr) {
    double drift = history.params.at("prior_variance_per_year") * days_between(p.date, asof) / 365.25;
    p.uncertainty = std::sqrt(p.uncertainty * p.uncertainty + drift);
  }
  p.date = asof;
  return p;
}

double rating_predict(const RatingHistory& history, const std::string& black_id, const std::string& white_id,
                      const Date& asof) {
  if (history.last_game && !(history.last_game->days() < asof.days()))
    throw std::invalid_argument("prediction date " + asof.iso() + " is not after the last rated game " +
                                history.last_game->iso());
  if (!has_player(history, black_id) || !has_player(history, white_id)) return 0.5;
  RatingPoint b = rating_at(history, black_id, asof);
  RatingPoint w = rating_at(history, white_id, asof);
  switch (history.system) {
    case System::Elo: return elo_expected(b.rating, w.rating);
    case System::Whr: return logistic(b.rating - w.rating);
    case System::TrueSkill: {
      TrueSkillParams p;
      p.beta = history.params.at("beta");
      return trueskill_win_probability(Gaussian{b.rating, b.uncertainty}, Gaussian{w.rating, w.uncertainty}, p);
    }
  }
  return 0.5;
}

CsvTable ratings_to_csv(const RatingHistory& history) {
  CsvTable t;
  t.header = {"system", "player_id", "date", "rating", "uncertainty"};
  for (const auto& [id, pts] : history.players)
    for (const auto& p : pts)
      t.rows.push_back({to_string(history.system), id, p.date.iso(), format_fixed(p.rating, 6),
                        format_fixed(p.uncertainty, 6)});
  return t;
}

std::string params_to_json(const RatingHistory& history) {
  nlohmann::ordered_json j;
  j["system"] = to_string(history.system);
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : history.params) j["params"][k] = v;
  if (history.last_game) j["last_game"] = history.last_game->iso();
  j["converged"] = history.converged;
  j["iterations"] = history.iterations;
  j["max_residual"] = history.max_residual;
  return j.dump(2) + "\n";
}

}  // namespace gostat::rating
