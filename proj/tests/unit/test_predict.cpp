#include <cmath>

#include "doctest.h"
#include "gostat/predict.hpp"
#include "gostat/random.hpp"

using namespace gostat;
using namespace gostat::predict;
using catalog::RegionPair;

namespace {

FeatureVector dated(int year, int label = 0) {
  FeatureVector v;
  v.game_id = "g" + std::to_string(year);
  v.date = Date(year, 6, 1);
  v.label = label;
  v.values.assign(features::schema().size(), 0.0);
  return v;
}

Dataset toy(std::vector<std::string> cols) {
  Dataset d;
  d.columns = std::move(cols);
  return d;
}

double train_accuracy(const Model& m, const Dataset& d) {
  int hit = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) hit += (m.predict_proba(d.row(i)) >= 0.5) == (d.y[i] == 1);
  return double(hit) / d.rows();
}

// Rows whose label depends only on one meta column.
std::vector<FeatureVector> meta_driven(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t driver = features::column_index("meta_whr_diff");
  std::vector<FeatureVector> rows;
  for (int i = 0; i < n; ++i) {
    FeatureVector v;
    v.game_id = "s" + std::to_string(i);
    v.date = Date::from_days(Date(2010, 1, 1).days() + static_cast<int>(rng.below(365 * 12)));
    v.category = catalog::kRegionPairs[rng.below(5)];
    for (std::size_t c = 0; c < features::schema().size(); ++c)
      v.values.push_back(rng.chance(0.05) ? features::kMissing : rng.normal());
    v.values[driver] = rng.normal();
    v.label = rng.chance(1.0 / (1.0 + std::exp(-3.0 * v.values[driver]))) ? 1 : 0;
    rows.push_back(std::move(v));
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------- split

TEST_CASE("split: by year with default boundaries") {
  std::vector<FeatureVector> rows{dated(2016), dated(2017), dated(2018), dated(2023)};
  auto s = chronological_split(rows);
  REQUIRE(s.train.size() == 2);
  REQUIRE(s.test.size() == 1);
  CHECK(s.train[0].date.year() == 2016);
  CHECK(s.train[1].date.year() == 2017);
  CHECK(s.test[0].date.year() == 2018);
}

TEST_CASE("split: empty input and bad specs") {
  auto s = chronological_split({});
  CHECK(s.train.empty());
  CHECK(s.test.empty());
  SplitSpec bad;
  bad.test_start = Date(2017, 6, 1);
  CHECK_THROWS_AS(chronological_split({}, bad), std::invalid_argument);
  SplitSpec inverted;
  inverted.test_end = Date(2017, 12, 31);
  CHECK_THROWS_AS(chronological_split({}, inverted), std::invalid_argument);
}

TEST_CASE("split: partition property") {
  auto rows = meta_driven(500, 1);
  auto s = chronological_split(rows);
  CHECK(s.train.size() + s.test.size() == rows.size());  // nothing outside 2010..2021
  for (const auto& a : s.train)
    for (const auto& b : s.test) CHECK(a.date < b.date);
}

TEST_CASE("reference corpus split sizes add up") {
  // published train/test sizes for the full professional corpus
  CHECK(77182 + 20861 == 98043);
}

// ---------------------------------------------------------------- logistic

TEST_CASE("logistic: separable toy set is fit exactly") {
  Rng rng(2);
  auto d = toy({"a", "b"});
  for (int i = 0; i < 200; ++i) {
    double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    if (std::fabs(a + 2 * b - 0.3) < 0.05) continue;
    std::vector<double> row{a, b};
    d.add_row(row, a + 2 * b > 0.3 ? 1 : 0);
  }
  auto m = fit_logistic(d, {0.5, 0.0, 2000});
  CHECK(train_accuracy(*m, d) == 1.0);
}

TEST_CASE("logistic: one-class labels give a constant model") {
  auto d = toy({"a"});
  for (int i = 0; i < 10; ++i) {
    std::vector<double> row{double(i)};
    d.add_row(row, 1);
  }
  std::vector<std::string> warnings;
  auto m = fit_logistic(d, {}, &warnings);
  CHECK(warnings.size() == 1);
  for (double x : {-100.0, 0.0, 3.0, 1e6}) {
    std::vector<double> row{x};
    CHECK(m->predict_proba(row) > 0.999);
  }
}

TEST_CASE("logistic: color-swapped augmentation gives complementary predictions") {
  // columns: x_black, x_white, x_diff, y_diff, shared
  Rng rng(3);
  auto d = toy({"x_black", "x_white", "x_diff", "y_diff", "shared"});
  auto swap = [](std::vector<double> r) {
    std::swap(r[0], r[1]);
    r[2] = -r[2];
    r[3] = -r[3];
    return r;
  };
  for (int i = 0; i < 300; ++i) {
    double xb = rng.normal(), xw = rng.normal(), yd = rng.normal();
    std::vector<double> r{xb, xw, xb - xw, yd, rng.uniform(0, 10)};
    if (rng.chance(0.1)) r[3] = features::kMissing;
    int label = rng.chance(1.0 / (1.0 + std::exp(-(r[2] + 0.5 * yd + 0.3)))) ? 1 : 0;
    d.add_row(r, label);
    d.add_row(swap(r), 1 - label);
  }
  auto m = fit_logistic(d);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> r{rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.uniform(0, 10)};
    double p = m->predict_proba(r), q = m->predict_proba(swap(r));
    CHECK(std::fabs(p + q - 1.0) < 1e-6);
  }
}

// ---------------------------------------------------------------- gbdt

TEST_CASE("gbdt: XOR is learned with depth 2") {
  Rng rng(4);
  auto make = [&](int n) {
    auto d = toy({"a", "b", "noise"});
    for (int i = 0; i < n; ++i) {
      double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
      std::vector<double> r{a, b, rng.normal()};
      d.add_row(r, (a > 0) != (b > 0) ? 1 : 0);
    }
    return d;
  };
  auto train = make(2000), test = make(1000);
  GbdtParams p;
  p.depth = 2;
  auto m = fit_gbdt(train, p);
  CHECK(train_accuracy(*m, test) >= 0.95);
  // the linear model cannot do this
  auto lin = fit_logistic(train);
  CHECK(train_accuracy(*lin, test) < 0.7);
}

TEST_CASE("gbdt: constant features predict the base rate") {
  auto d = toy({"a", "b"});
  for (int i = 0; i < 100; ++i) {
    std::vector<double> r{5.0, -1.0};
    d.add_row(r, i < 30 ? 1 : 0);
  }
  auto m = fit_gbdt(d);
  std::vector<double> r{5.0, -1.0};
  CHECK(m->predict_proba(r) == doctest::Approx(0.3).epsilon(1e-9));
  for (const auto& t : m->trees()) CHECK(t.size() == 1);
}

TEST_CASE("gbdt: a single stump separates a monotone feature") {
  auto d = toy({"x"});
  for (int i = 0; i < 100; ++i) {
    std::vector<double> r{double(i)};
    d.add_row(r, i >= 50 ? 1 : 0);
  }
  GbdtParams p;
  p.n_trees = 1;
  p.depth = 1;
  auto m = fit_gbdt(d, p);
  REQUIRE(m->trees().size() == 1);
  REQUIRE(m->trees()[0].size() == 3);
  CHECK(m->trees()[0][0].threshold == 49.5);
  CHECK(train_accuracy(*m, d) == 1.0);
}

TEST_CASE("gbdt: no trees means the base rate") {
  auto d = toy({"x"});
  for (int i = 0; i < 40; ++i) {
    std::vector<double> r{double(i)};
    d.add_row(r, i % 4 == 0 ? 1 : 0);
  }
  GbdtParams p;
  p.n_trees = 0;
  auto m = fit_gbdt(d, p);
  std::vector<double> r{3.0};
  CHECK(m->predict_proba(r) == doctest::Approx(0.25));
}

TEST_CASE("gbdt: missing values follow the side that helps") {
  auto d = toy({"x"});
  for (int i = 0; i < 200; ++i) {
    std::vector<double> r{i < 100 ? features::kMissing : double(i % 50)};
    d.add_row(r, i < 100 ? 1 : (i % 50 >= 45 ? 1 : 0));
  }
  auto m = fit_gbdt(d);
  std::vector<double> miss{features::kMissing}, low{1.0};
  CHECK(m->predict_proba(miss) > 0.9);
  CHECK(m->predict_proba(low) < 0.1);
}

TEST_CASE("gbdt: many distinct values are binned, fit stays deterministic") {
  Rng rng(5);
  auto d = toy({"x", "y"});
  for (int i = 0; i < 3000; ++i) {
    std::vector<double> r{rng.normal(), rng.normal()};
    d.add_row(r, rng.chance(1.0 / (1.0 + std::exp(-2 * r[0] * r[1]))) ? 1 : 0);
  }
  auto a = fit_gbdt(d), b = fit_gbdt(d);
  CHECK(a->to_json() == b->to_json());
  CHECK(train_accuracy(*a, d) > 0.65);
}

TEST_CASE("gbdt: bad hyperparameters") {
  GbdtParams p;
  p.depth = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.max_bins = 300;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------- model files

TEST_CASE("models survive a JSON round trip") {
  Rng rng(6);
  auto d = toy({"meta_komi", "ctx_mr_long_diff"});
  for (int i = 0; i < 400; ++i) {
    std::vector<double> r{rng.chance(0.1) ? features::kMissing : rng.normal(), rng.normal()};
    d.add_row(r, rng.chance(0.5) ? 1 : 0);
  }
  for (ModelKind k : {ModelKind::Logistic, ModelKind::Gbdt}) {
    auto m = fit(k, d);
    auto back = model_from_json(m->to_json());
    CHECK(back->kind() == m->kind());
    CHECK(back->columns() == m->columns());
    CHECK(back->to_json() == m->to_json());
    for (std::size_t i = 0; i < d.rows(); ++i) CHECK(back->predict_proba(d.row(i)) == m->predict_proba(d.row(i)));
  }
  CHECK_THROWS_AS(model_from_json("{\"kind\":\"forest\",\"columns\":[]}"), std::runtime_error);
  CHECK_THROWS_AS(model_from_json("not json"), std::runtime_error);
  CHECK_THROWS_AS(parse_model_kind("forest"), std::invalid_argument);
}

// ---------------------------------------------------------------- metrics

TEST_CASE("metrics: six hand-computed predictions") {
  std::vector<double> p{0.8, 0.4, 0.5, 0.3, 0.9, 0.6};
  std::vector<int> y{1, 1, 0, 0, 0, 1};
  std::vector<RegionPair> c{RegionPair::CR, RegionPair::CR, RegionPair::CR,
                            RegionPair::KOR, RegionPair::KOR, RegionPair::KOR};
  auto m = evaluate(p, y, c);
  REQUIRE(m.rows.size() == 6);
  // CR: hit, miss, miss (0.5 counts as black); KOR: hit, miss, hit
  CHECK(m.row("CR").n == 3);
  CHECK(*m.row("CR").acc == 1.0 / 3);
  CHECK(*m.row("CR").mse == doctest::Approx((0.04 + 0.36 + 0.25) / 3).epsilon(1e-12));
  CHECK(*m.row("KOR").acc == 2.0 / 3);
  CHECK(*m.row("KOR").mse == doctest::Approx((0.09 + 0.81 + 0.16) / 3).epsilon(1e-12));
  CHECK(m.row("Mean").n == 6);
  CHECK(*m.row("Mean").acc == 0.5);
  CHECK(*m.row("Mean").mse == doctest::Approx(1.71 / 6).epsilon(1e-12));
  for (const char* empty : {"CHN", "JPN", "Others"}) {
    CHECK(m.row(empty).n == 0);
    CHECK_FALSE(m.row(empty).acc);
    CHECK_FALSE(m.row(empty).mse);
  }
  long sum = 0;
  for (std::size_t k = 1; k < m.rows.size(); ++k) sum += m.rows[k].n;
  CHECK(sum == m.row("Mean").n);
}

TEST_CASE("metrics: trivial identities") {
  std::vector<int> y{1, 0, 1, 1, 0};
  std::vector<RegionPair> c(5, RegionPair::JPN);
  std::vector<double> perfect{1, 0, 1, 1, 0};
  auto m = evaluate(perfect, y, c);
  CHECK(*m.row("Mean").acc == 1.0);
  CHECK(*m.row("Mean").mse == 0.0);
  std::vector<double> half(5, 0.5);
  CHECK(*evaluate(half, y, c).row("JPN").mse == 0.25);
  CHECK_THROWS_AS(evaluate(std::vector<double>{}, std::vector<int>{}, std::vector<RegionPair>{}), std::invalid_argument);
}

// ---------------------------------------------------------------- ablation

TEST_CASE("ablation: masks select whole groups") {
  auto cols = masked_columns({true, false, false});
  CHECK(!cols.empty());
  for (const auto& c : cols) CHECK(c.rfind("meta_", 0) == 0);
  CHECK(masked_columns({true, true, true}).size() == features::schema().size());
  CHECK_THROWS_AS(masked_columns({false, false, false}), std::invalid_argument);
  std::vector<std::string> labels;
  for (const auto& m : default_masks()) labels.push_back(m.label());
  CHECK(labels == std::vector<std::string>{"M", "C", "I", "MC", "MCI"});
}

TEST_CASE("ablation: all groups equals a plain run, meta-driven labels favour meta") {
  auto rows = meta_driven(1500, 7);
  for (ModelKind k : {ModelKind::Logistic, ModelKind::Gbdt}) {
    auto table = run_ablation(rows, default_masks(), k);
    REQUIRE(table.size() == 5);
    auto s = chronological_split(rows);
    auto plain = fit(k, to_dataset(s.train, features::column_names()));
    CHECK(table.back().metrics == evaluate(*plain, s.test));
    double meta = *table[0].metrics.row("Mean").acc;
    double all = *table[4].metrics.row("Mean").acc;
    CHECK(meta >= all - 0.02);
    CHECK(meta > 0.7);
    // the other groups carry nothing
    CHECK(*table[1].metrics.row("Mean").acc < 0.6);
    auto csv = ablation_to_csv(table);
    CHECK(csv.rows.size() == 5);
    CHECK(csv.header.size() == 4 + 18);
  }
}

TEST_CASE("predictions and metrics tables") {
  std::vector<FeatureVector> rows{dated(2018, 1), dated(2019, 0)};
  rows[1].category = RegionPair::CHN;
  std::vector<double> p{0.75, 0.5};
  auto t = predictions_to_csv(rows, p);
  CHECK(t.header == std::vector<std::string>{"game_id", "p_black", "label", "category"});
  CHECK(t.rows[0] == std::vector<std::string>{"g2018", "0.75", "1", "Others"});
  std::vector<int> y{1, 0};
  std::vector<RegionPair> c{RegionPair::Others, RegionPair::CHN};
  auto mt = metrics_to_csv({{"whr", evaluate(p, y, c)}});
  CHECK(mt.rows[0][0] == "whr");
  CHECK(mt.rows[0][1] == "0.5000");
  CHECK(mt.rows[0][4] == "");  // CR has no games
}
