#include "gostat/predict.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace gostat::predict {

using json = nlohmann::ordered_json;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double logit_of_rate(double rate) {
  rate = std::clamp(rate, 1e-6, 1.0 - 1e-6);
  return std::log(rate / (1.0 - rate));
}

}  // namespace

// ---------------------------------------------------------------- split

void SplitSpec::validate() const {
  if (!(train_end < test_start)) throw std::invalid_argument("train_end must precede test_start");
  if (test_end < test_start) throw std::invalid_argument("test_end must not precede test_start");
}

Split chronological_split(std::span<const FeatureVector> rows, const SplitSpec& spec) {
  spec.validate();
  Split s;
  for (const auto& r : rows) {
    if (r.date <= spec.train_end) s.train.push_back(r);
    else if (spec.test_start <= r.date && r.date <= spec.test_end) s.test.push_back(r);
  }
  return s;
}

// ---------------------------------------------------------------- data

void Dataset::add_row(std::span<const double> values, int label) {
  if (values.size() != columns.size()) throw std::invalid_argument("row width does not match the dataset");
  x.insert(x.end(), values.begin(), values.end());
  y.push_back(label);
}

void AblationMask::validate() const {
  if (!meta && !contextual && !ingame) throw std::invalid_argument("ablation mask selects no feature group");
}

std::string AblationMask::label() const {
  std::string s;
  if (meta) s += 'M';
  if (contextual) s += 'C';
  if (ingame) s += 'I';
  return s;
}

bool AblationMask::includes(features::Group g) const {
  switch (g) {
    case features::Group::Meta: return meta;
    case features::Group::Contextual: return contextual;
    case features::Group::InGame: return ingame;
  }
  return false;
}

std::vector<AblationMask> default_masks() {
  return {{true, false, false}, {false, true, false}, {false, false, true}, {true, true, false}, {true, true, true}};
}

std::vector<std::string> masked_columns(const AblationMask& mask) {
  mask.validate();
  std::vector<std::string> out;
  for (const auto& c : features::schema())
    if (mask.includes(c.group)) out.push_back(c.name);
  return out;
}

Dataset to_dataset(std::span<const FeatureVector> rows, const std::vector<std::string>& columns) {
  Dataset d;
  d.columns = columns;
  std::vector<std::size_t> idx;
  for (const auto& c : columns) idx.push_back(features::column_index(c));
  d.x.reserve(rows.size() * columns.size());
  for (const auto& r : rows) {
    if (r.values.size() != features::schema().size()) throw std::invalid_argument("feature row " + r.game_id + " has the wrong width");
    for (std::size_t i : idx) d.x.push_back(r.values[i]);
    d.y.push_back(r.label);
  }
  return d;
}

// ---------------------------------------------------------------- model base

Model::Model(std::vector<std::string> columns) : columns_(std::move(columns)) {
  const auto& names = features::column_names();
  for (const auto& c : columns_) {
    auto it = std::find(names.begin(), names.end(), c);
    if (it == names.end()) {
      index_.clear();
      return;
    }
    index_.push_back(static_cast<std::size_t>(it - names.begin()));
  }
}

double Model::predict(const FeatureVector& v) const {
  if (index_.size() != columns_.size()) throw std::invalid_argument("model columns are not feature columns");
  std::vector<double> row;
  row.reserve(index_.size());
  for (std::size_t i : index_) row.push_back(v.values.at(i));
  return predict_proba(row);
}

std::vector<double> predict_all(const Model& model, std::span<const FeatureVector> rows) {
  std::vector<double> p;
  p.reserve(rows.size());
  for (const auto& r : rows) p.push_back(model.predict(r));
  return p;
}

// ---------------------------------------------------------------- logistic

LogisticModel::LogisticModel(std::vector<std::string> columns, std::vector<double> mean, std::vector<double> scale,
                             std::vector<double> weights, double bias)
    : Model(std::move(columns)), mean_(std::move(mean)), scale_(std::move(scale)), weights_(std::move(weights)),
      bias_(bias) {
  if (mean_.size() != columns_.size() || scale_.size() != columns_.size() || weights_.size() != columns_.size())
    throw std::invalid_argument("logistic model parameter lengths differ");
}

double LogisticModel::predict_proba(std::span<const double> row) const {
  if (row.size() != weights_.size()) throw std::invalid_argument("row width does not match the model");
  double z = bias_;
  for (std::size_t j = 0; j < row.size(); ++j)
    if (!std::isnan(row[j])) z += weights_[j] * (row[j] - mean_[j]) / scale_[j];
  return sigmoid(z);
}

std::string LogisticModel::to_json() const {
  json j;
  j["kind"] = kind();
  j["columns"] = columns_;
  j["mean"] = mean_;
  j["scale"] = scale_;
  j["weights"] = weights_;
  j["bias"] = bias_;
  return j.dump(1);
}

std::unique_ptr<LogisticModel> fit_logistic(const Dataset& data, const LogisticParams& params,
                                            std::vector<std::string>* warnings) {
  if (params.learning_rate <= 0 || params.l2 < 0 || params.epochs < 0)
    throw std::invalid_argument("bad logistic hyperparameters");
  std::size_t n = data.rows(), d = data.cols();
  if (n == 0) throw std::invalid_argument("cannot fit on an empty dataset");
  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0, ss = 0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = data.at(i, j);
      if (std::isnan(v)) continue;
      s += v;
      ++k;
    }
    if (k == 0) continue;
    mean[j] = s / static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i) {
      double v = data.at(i, j);
      if (!std::isnan(v)) ss += (v - mean[j]) * (v - mean[j]);
    }
    double sd = std::sqrt(ss / static_cast<double>(k));
    if (sd > 1e-12) scale[j] = sd;
  }

  long positives = std::accumulate(data.y.begin(), data.y.end(), 0L);
  if (positives == 0 || positives == static_cast<long>(n)) {
    if (warnings) warnings->push_back("all training labels are " + std::to_string(data.y.front()) + "; constant model");
    return std::make_unique<LogisticModel>(data.columns, mean, scale, std::vector<double>(d, 0.0),
                                           logit_of_rate(static_cast<double>(positives) / n));
  }

  std::vector<double> z(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double v = data.at(i, j);
      z[i * d + j] = std::isnan(v) ? 0.0 : (v - mean[j]) / scale[j];
    }
  std::vector<double> w(d, 0.0), grad(d);
  double b = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &z[i * d];
      double s = b;
      for (std::size_t j = 0; j < d; ++j) s += w[j] * row[j];
      double r = sigmoid(s) - data.y[i];
      gb += r;
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * row[j];
    }
    for (std::size_t j = 0; j < d; ++j) w[j] -= params.learning_rate * (grad[j] / n + params.l2 * w[j]);
    b -= params.learning_rate * gb / n;
  }
  return std::make_unique<LogisticModel>(data.columns, mean, scale, w, b);
}

// ---------------------------------------------------------------- gbdt

void GbdtParams::validate() const {
  if (n_trees < 0 || depth < 1 || !(shrinkage > 0) || min_leaf < 1 || lambda < 0 || max_bins < 2 || max_bins > 255)
    throw std::invalid_argument("bad gbdt hyperparameters");
}

GbdtModel::GbdtModel(std::vector<std::string> columns, double base_score, std::vector<Tree> trees)
    : Model(std::move(columns)), base_score_(base_score), trees_(std::move(trees)) {}

double GbdtModel::margin(std::span<const double> row) const {
  if (row.size() != columns_.size()) throw std::invalid_argument("row width does not match the model");
  double m = base_score_;
  for (const auto& t : trees_) {
    int at = 0;
    while (t[at].feature >= 0) {
      const auto& node = t[at];
      double v = row[static_cast<std::size_t>(node.feature)];
      bool left = std::isnan(v) ? node.missing_left : v <= node.threshold;
      at = left ? node.left : node.right;
    }
    m += t[at].value;
  }
  return m;
}

double GbdtModel::predict_proba(std::span<const double> row) const { return sigmoid(margin(row)); }

std::string GbdtModel::to_json() const {
  json j;
  j["kind"] = kind();
  j["columns"] = columns_;
  j["base_score"] = base_score_;
  json trees = json::array();
  for (const auto& t : trees_) {
    json nodes = json::array();
    for (const auto& n : t) {
      if (n.feature < 0) nodes.push_back(json{{"value", n.value}});
      else
        nodes.push_back(json{{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"missing_left", n.missing_left},
                             {"left", n.left},
                             {"right", n.right}});
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump(1);
}

namespace {

constexpr std::uint8_t kMissingBin = 255;

struct Binned {
  std::vector<std::vector<double>> cuts;  // per feature; bin b holds values in (cuts[b-1], cuts[b]]
  std::vector<std::uint8_t> code;         // row-major
};

std::vector<double> cut_points(std::vector<double> values, int max_bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> uniq;
  for (double v : values)
    if (uniq.empty() || v != uniq.back()) uniq.push_back(v);
  std::vector<double> cuts;
  if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) cuts.push_back(uniq[i] + (uniq[i + 1] - uniq[i]) / 2);
    return cuts;
  }
  for (int q = 1; q < max_bins; ++q) {
    double c = values[values.size() * static_cast<std::size_t>(q) / static_cast<std::size_t>(max_bins)];
    if (c < uniq.back() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
  }
  return cuts;
}

Binned bin_dataset(const Dataset& data, int max_bins) {
  Binned b;
  std::size_t n = data.rows(), d = data.cols();
  b.cuts.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isnan(data.at(i, j))) vals.push_back(data.at(i, j));
    b.cuts[j] = cut_points(std::move(vals), max_bins);
  }
  b.code.resize(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double v = data.at(i, j);
      const auto& c = b.cuts[j];
      b.code[i * d + j] = std::isnan(v) ? kMissingBin
                                        : static_cast<std::uint8_t>(std::lower_bound(c.begin(), c.end(), v) - c.begin());
    }
  return b;
}

struct Stat {
  double g = 0, h = 0;
  long n = 0;
  void add(const Stat& o) {
    g += o.g;
    h += o.h;
    n += o.n;
  }
};

struct SplitChoice {
  double gain = 0;
  int feature = -1;
  int bin = 0;
  bool missing_left = false;
};

class TreeBuilder {
 public:
  TreeBuilder(const Binned& b, std::size_t d, const std::vector<double>& g, const std::vector<double>& h,
              const GbdtParams& p)
      : b_(b), d_(d), g_(g), h_(h), p_(p) {}

  // Returns the tree; `leaf_of` receives the leaf value for every row index.
  Tree build(std::vector<std::size_t> rows, std::vector<double>& delta) {
    tree_.clear();
    grow(std::move(rows), 0, delta);
    return std::move(tree_);
  }

 private:
  double score(const Stat& s) const { return s.g * s.g / (s.h + p_.lambda); }

  SplitChoice best_split(const std::vector<std::size_t>& rows, const Stat& total) const {
    SplitChoice best;
    std::vector<Stat> hist;
    for (std::size_t f = 0; f < d_; ++f) {
      std::size_t nb = b_.cuts[f].size() + 1;
      if (nb < 2) continue;
      hist.assign(nb, Stat{});
      Stat miss;
      for (std::size_t r : rows) {
        std::uint8_t c = b_.code[r * d_ + f];
        Stat s{g_[r], h_[r], 1};
        if (c == kMissingBin) miss.add(s);
        else hist[c].add(s);
      }
      Stat left;
      for (std::size_t bin = 0; bin + 1 < nb; ++bin) {
        left.add(hist[bin]);
        for (bool ml : {false, true}) {
          Stat l = left;
          if (ml) l.add(miss);
          Stat r{total.g - l.g, total.h - l.h, total.n - l.n};
          if (l.n < p_.min_leaf || r.n < p_.min_leaf) continue;
          double gain = score(l) + score(r) - score(total);
          if (gain > best.gain + 1e-12) best = {gain, static_cast<int>(f), static_cast<int>(bin), ml};
        }
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t> rows, int depth, std::vector<double>& delta) {
    Stat total;
    for (std::size_t r : rows) total.add(Stat{g_[r], h_[r], 1});
    int id = static_cast<int>(tree_.size());
    tree_.push_back(TreeNode{});
    SplitChoice s;
    if (depth < p_.depth && total.n >= 2L * p_.min_leaf) s = best_split(rows, total);
    if (s.feature < 0) {
      double v = -total.g / (total.h + p_.lambda) * p_.shrinkage;
      tree_[id].value = v;
      for (std::size_t r : rows) delta[r] = v;
      return id;
    }
    std::vector<std::size_t> lrows, rrows;
    for (std::size_t r : rows) {
      std::uint8_t c = b_.code[r * d_ + static_cast<std::size_t>(s.feature)];
      bool left = c == kMissingBin ? s.missing_left : c <= s.bin;
      (left ? lrows : rrows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    int l = grow(std::move(lrows), depth + 1, delta);
    int r = grow(std::move(rrows), depth + 1, delta);
    auto& node = tree_[id];
    node.feature = s.feature;
    node.threshold = b_.cuts[static_cast<std::size_t>(s.feature)][static_cast<std::size_t>(s.bin)];
    node.missing_left = s.missing_left;
    node.left = l;
    node.right = r;
    return id;
  }

  const Binned& b_;
  std::size_t d_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  const GbdtParams& p_;
  Tree tree_;
};

}  // namespace

std::unique_ptr<GbdtModel> fit_gbdt(const Dataset& data, const GbdtParams& params) {
  params.validate();
  std::size_t n = data.rows();
  if (n == 0) throw std::invalid_argument("cannot fit on an empty dataset");
  double rate = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(n);
  double base = logit_of_rate(rate);
  std::vector<Tree> trees;
  if (params.n_trees == 0) return std::make_unique<GbdtModel>(data.columns, base, std::move(trees));

  Binned binned = bin_dataset(data, params.max_bins);
  std::vector<double> margin(n, base), g(n), h(n), delta(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  TreeBuilder builder(binned, data.cols(), g, h, params);
  for (int t = 0; t < params.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = sigmoid(margin[i]);
      g[i] = p - data.y[i];
      h[i] = std::max(p * (1.0 - p), 1e-16);
    }
    trees.push_back(builder.build(all, delta));
    for (std::size_t i = 0; i < n; ++i) margin[i] += delta[i];
  }
  return std::make_unique<GbdtModel>(data.columns, base, std::move(trees));
}

// ---------------------------------------------------------------- dispatch

const char* to_string(ModelKind k) { return k == ModelKind::Logistic ? "logistic" : "gbdt"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "logistic") return ModelKind::Logistic;
  if (s == "gbdt") return ModelKind::Gbdt;
  throw std::invalid_argument("unknown model kind '" + std::string(s) + "' (logistic|gbdt)");
}

std::unique_ptr<Model> fit(ModelKind kind, const Dataset& data, const TrainParams& params,
                           std::vector<std::string>* warnings) {
  if (kind == ModelKind::Logistic) return fit_logistic(data, params.logistic, warnings);
  return fit_gbdt(data, params.gbdt);
}

std::unique_ptr<Model> model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
    auto columns = j.at("columns").get<std::vector<std::string>>();
    auto kind = j.at("kind").get<std::string>();
    if (kind == "logistic")
      return std::make_unique<LogisticModel>(columns, j.at("mean").get<std::vector<double>>(),
                                             j.at("scale").get<std::vector<double>>(),
                                             j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>());
    if (kind == "gbdt") {
      std::vector<Tree> trees;
      for (const auto& jt : j.at("trees")) {
        Tree t;
        for (const auto& jn : jt) {
          TreeNode n;
          if (jn.contains("value")) {
            n.value = jn.at("value").get<double>();
          } else {
            n.feature = jn.at("feature").get<int>();
            n.threshold = jn.at("threshold").get<double>();
            n.missing_left = jn.at("missing_left").get<bool>();
            n.left = jn.at("left").get<int>();
            n.right = jn.at("right").get<int>();
            if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= columns.size())
              throw std::runtime_error("tree node feature out of range");
          }
          t.push_back(n);
        }
        for (const auto& n : t)
          if (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= static_cast<int>(t.size()) ||
                                 n.right >= static_cast<int>(t.size())))
            throw std::runtime_error("tree child index out of range");
        if (t.empty()) throw std::runtime_error("empty tree");
        trees.push_back(std::move(t));
      }
      return std::make_unique<GbdtModel>(columns, j.at("base_score").get<double>(), std::move(trees));
    }
    throw std::runtime_error("unknown model kind " + kind);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad model file: ") + e.what());
  }
}

// ---------------------------------------------------------------- evaluation

const CategoryMetrics& Metrics::row(std::string_view name) const {
  for (const auto& r : rows)
    if (r.name == name) return r;
  throw std::out_of_range("no metrics row " + std::string(name));
}

Metrics evaluate(std::span<const double> p_black, std::span<const int> labels,
                 std::span<const catalog::RegionPair> categories) {
  if (p_black.empty()) throw std::invalid_argument("nothing to evaluate");
  if (labels.size() != p_black.size() || categories.size() != p_black.size())
    throw std::invalid_argument("prediction, label and category counts differ");
  struct Acc {
    long n = 0, correct = 0;
    double sq = 0;
  };
  std::array<Acc, kMetricRows.size()> acc{};
  for (std::size_t i = 0; i < p_black.size(); ++i) {
    double p = p_black[i];
    int y = labels[i];
    bool hit = (p >= 0.5) == (y == 1);
    double e = (p - y) * (p - y);
    std::string_view cat = catalog::to_string(categories[i]);
    for (std::size_t k = 0; k < kMetricRows.size(); ++k) {
      if (k != 0 && cat != kMetricRows[k]) continue;
      acc[k].n += 1;
      acc[k].correct += hit;
      acc[k].sq += e;
    }
  }
  Metrics m;
  for (std::size_t k = 0; k < kMetricRows.size(); ++k) {
    CategoryMetrics c;
    c.name = kMetricRows[k];
    c.n = acc[k].n;
    if (c.n > 0) {
      c.acc = static_cast<double>(acc[k].correct) / static_cast<double>(c.n);
      c.mse = acc[k].sq / static_cast<double>(c.n);
    }
    m.rows.push_back(c);
  }
  return m;
}

Metrics evaluate(const Model& model, std::span<const FeatureVector> test) {
  std::vector<int> labels;
  std::vector<catalog::RegionPair> cats;
  for (const auto& r : test) {
    labels.push_back(r.label);
    cats.push_back(r.category);
  }
  auto p = predict_all(model, test);
  return evaluate(p, labels, cats);
}

std::vector<AblationRow> run_ablation(std::span<const FeatureVector> rows, const std::vector<AblationMask>& masks,
                                      ModelKind kind, const SplitSpec& split, const TrainParams& params) {
  for (const auto& m : masks) m.validate();
  Split s = chronological_split(rows, split);
  if (s.train.empty() || s.test.empty()) throw std::invalid_argument("split leaves an empty train or test set");
  std::vector<AblationRow> out;
  for (const auto& m : masks) {
    auto model = fit(kind, to_dataset(s.train, masked_columns(m)), params);
    out.push_back({m, evaluate(*model, s.test)});
  }
  return out;
}

// ---------------------------------------------------------------- csv

CsvTable predictions_to_csv(std::span<const FeatureVector> rows, std::span<const double> p_black) {
  if (rows.size() != p_black.size()) throw std::invalid_argument("prediction count differs from rows");
  CsvTable t;
  t.header = {"game_id", "p_black", "label", "category"};
  for (std::size_t i = 0; i < rows.size(); ++i)
    t.rows.push_back({rows[i].game_id, format_shortest(p_black[i]), std::to_string(rows[i].label),
                      catalog::to_string(rows[i].category)});
  return t;
}

namespace {

std::vector<std::string> metric_header() {
  std::vector<std::string> h;
  for (const char* c : kMetricRows)
    for (const char* m : {"ACC", "MSE", "n"}) h.push_back(std::string(c) + "_" + m);
  return h;
}

void append_metrics(std::vector<std::string>& line, const Metrics& m) {
  for (const auto& r : m.rows) {
    line.push_back(r.acc ? format_fixed(*r.acc, 4) : "");
    line.push_back(r.mse ? format_fixed(*r.mse, 4) : "");
    line.push_back(std::to_string(r.n));
  }
}

}  // namespace

CsvTable metrics_to_csv(const std::vector<std::pair<std::string, Metrics>>& models) {
  CsvTable t;
  t.header = {"model"};
  for (auto& h : metric_header()) t.header.push_back(h);
  for (const auto& [name, m] : models) {
    std::vector<std::string> line{name};
    append_metrics(line, m);
    t.rows.push_back(std::move(line));
  }
  return t;
}

CsvTable ablation_to_csv(const std::vector<AblationRow>& rows) {
  CsvTable t;
  t.header = {"mask", "meta", "contextual", "ingame"};
  for (auto& h : metric_header()) t.header.push_back(h);
  for (const auto& r : rows) {
    std::vector<std::string> line{r.mask.label(), r.mask.meta ? "1" : "0", r.mask.contextual ? "1" : "0",
                                  r.mask.ingame ? "1" : "0"};
    append_metrics(line, r.metrics);
    t.rows.push_back(std::move(line));
  }
  return t;
}

}  // namespace gostat::predict
