#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gostat/csv.hpp"
#include "gostat/date.hpp"
#include "gostat/features.hpp"

namespace gostat::predict {

using features::FeatureVector;

struct SplitSpec {
  Date train_end = Date(2017, 12, 31);
  Date test_start = Date(2018, 1, 1);
  Date test_end = Date(2021, 12, 31);
  void validate() const;  // std::invalid_argument unless train_end < test_start <= test_end
};

struct Split {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;
};

Split chronological_split(std::span<const FeatureVector> rows, const SplitSpec& spec = {});

// Dense row-major matrix; NaN marks a missing value.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<double> x;
  std::vector<int> y;
  std::size_t rows() const { return y.size(); }
  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return x[r * columns.size() + c]; }
  std::span<const double> row(std::size_t r) const { return {x.data() + r * columns.size(), columns.size()}; }
  void add_row(std::span<const double> values, int label);
};

struct AblationMask {
  bool meta = true;
  bool contextual = true;
  bool ingame = true;
  void validate() const;
  std::string label() const;  // "M", "MC", "MCI", ...
  bool includes(features::Group g) const;
  bool operator==(const AblationMask&) const = default;
};

// M, C, I, MC, MCI.
std::vector<AblationMask> default_masks();

std::vector<std::string> masked_columns(const AblationMask& mask);
Dataset to_dataset(std::span<const FeatureVector> rows, const std::vector<std::string>& columns);

class Model {
 public:
  virtual ~Model() = default;
  virtual std::string kind() const = 0;
  // `row` follows columns().
  virtual double predict_proba(std::span<const double> row) const = 0;
  virtual std::string to_json() const = 0;
  const std::vector<std::string>& columns() const { return columns_; }
  // Throws std::invalid_argument if a model column is not a feature column.
  double predict(const FeatureVector& v) const;

 protected:
  explicit Model(std::vector<std::string> columns);
  std::vector<std::string> columns_;
  std::vector<std::size_t> index_;  // schema positions; empty if some column is foreign
};

std::unique_ptr<Model> model_from_json(std::string_view text);

struct LogisticParams {
  double learning_rate = 0.1;
  double l2 = 1e-3;
  int epochs = 400;
};

class LogisticModel : public Model {
 public:
  LogisticModel(std::vector<std::string> columns, std::vector<double> mean, std::vector<double> scale,
                std::vector<double> weights, double bias);
  std::string kind() const override { return "logistic"; }
  double predict_proba(std::span<const double> row) const override;
  std::string to_json() const override;
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> mean_, scale_, weights_;
  double bias_;
};

// Standardized full-batch gradient descent; missing values sit at the column
// mean. One-class labels give a constant model and a note in `warnings`.
std::unique_ptr<LogisticModel> fit_logistic(const Dataset& data, const LogisticParams& params = {},
                                            std::vector<std::string>* warnings = nullptr);

struct GbdtParams {
  int n_trees = 200;
  int depth = 3;
  double shrinkage = 0.1;
  int min_leaf = 20;
  double lambda = 1.0;
  int max_bins = 255;
  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;  // value <= threshold goes left
  bool missing_left = false;
  int left = -1, right = -1;
  double value = 0.0;  // leaf output, shrinkage applied
};

using Tree = std::vector<TreeNode>;  // node 0 is the root

class GbdtModel : public Model {
 public:
  GbdtModel(std::vector<std::string> columns, double base_score, std::vector<Tree> trees);
  std::string kind() const override { return "gbdt"; }
  double predict_proba(std::span<const double> row) const override;
  double margin(std::span<const double> row) const;
  std::string to_json() const override;
  const std::vector<Tree>& trees() const { return trees_; }
  double base_score() const { return base_score_; }

 private:
  double base_score_;
  std::vector<Tree> trees_;
};

// Histogram boosting on logistic loss with Newton leaf values.
std::unique_ptr<GbdtModel> fit_gbdt(const Dataset& data, const GbdtParams& params = {});

enum class ModelKind { Logistic, Gbdt };
const char* to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct TrainParams {
  LogisticParams logistic;
  GbdtParams gbdt;
};

std::unique_ptr<Model> fit(ModelKind kind, const Dataset& data, const TrainParams& params = {},
                           std::vector<std::string>* warnings = nullptr);

// ---- evaluation

inline constexpr std::array<const char*, 6> kMetricRows = {"Mean", "CR", "CHN", "KOR", "JPN", "Others"};

struct CategoryMetrics {
  std::string name;
  long n = 0;
  std::optional<double> acc;  // empty when n = 0
  std::optional<double> mse;
  bool operator==(const CategoryMetrics&) const = default;
};

struct Metrics {
  std::vector<CategoryMetrics> rows;  // kMetricRows order
  const CategoryMetrics& row(std::string_view name) const;
  bool operator==(const Metrics&) const = default;
};

// p >= 0.5 predicts a black win. Throws std::invalid_argument on empty input.
Metrics evaluate(std::span<const double> p_black, std::span<const int> labels,
                 std::span<const catalog::RegionPair> categories);
Metrics evaluate(const Model& model, std::span<const FeatureVector> test);

std::vector<double> predict_all(const Model& model, std::span<const FeatureVector> rows);

struct AblationRow {
  AblationMask mask;
  Metrics metrics;
};

std::vector<AblationRow> run_ablation(std::span<const FeatureVector> rows, const std::vector<AblationMask>& masks,
                                      ModelKind kind, const SplitSpec& split = {}, const TrainParams& params = {});

CsvTable predictions_to_csv(std::span<const FeatureVector> rows, std::span<const double> p_black);
// One row per model, ACC / MSE / n for each category.
CsvTable metrics_to_csv(const std::vector<std::pair<std::string, Metrics>>& models);
CsvTable ablation_to_csv(const std::vector<AblationRow>& rows);

}  // namespace gostat::predict
