#pragma once

#include "ava/aggregation.hpp"
#include "ava/pipeline.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ava {

struct GoldSet {
  std::vector<Index> features;  // ascending
  Index m = 1;
  nlohmann::json source;  // the pruned tree that produced it
};

// Features used by a tree pruned to at most m split features.
GoldSet gold_set(const Dataset& train, Index m);

// The candidate maximizing mean k-fold accuracy of the pruned tree; ties go
// to the smallest m.
Index select_m(const Dataset& train, const std::vector<Index>& m_candidates, Index folds,
               std::uint64_t seed);

// Indices of the m largest |g_i|, ties to the lower index.
std::vector<Index> top_m_by_magnitude(const Vector& g, Index m);

// |top-m(g) intersect gold| / |gold|.
double recall_at_gold(const Vector& g, const GoldSet& gold);

struct RandomBaseline {
  double mean = 0.0;
  double variance = 0.0;  // of a single trial's recall
  Index n_trials = 0;
};

// Recall of uniformly drawn m-subsets against the gold set.
RandomBaseline random_baseline(Index d, const GoldSet& gold, Index n_trials, std::uint64_t seed);
// Same with the gold set {0, ..., m-1}; the draw is exchangeable so only m matters.
RandomBaseline random_baseline(Index d, Index m, Index n_trials, std::uint64_t seed);

// (1/m) * sum of the m largest entries of |g| / sum |g|.
double mean_feature_importance(const Vector& g, Index m);

enum class EvalMethod { random, shap, ig, ava_shap, ava_ig };

std::string_view to_string(EvalMethod m);
EvalMethod eval_method_from_string(std::string_view name);

struct MPolicy {
  std::optional<Index> fixed;  // otherwise chosen by cross validation
  std::vector<Index> candidates;  // empty: 1..min(d, 8)
  Index folds = 5;
};

struct BenchmarkConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<ModelSpec> models;
  std::vector<EvalMethod> methods{EvalMethod::random, EvalMethod::shap, EvalMethod::ig,
                                  EvalMethod::ava_shap, EvalMethod::ava_ig};
  std::vector<std::uint64_t> seeds{0};
  AvaConfig ava;
  MPolicy m_policy;
  Index random_trials = 1000;
  Index max_test_points = 0;  // 0: every test point
  std::vector<Index> k_values;  // non-empty adds a k sweep for the AVA methods
  int jobs = 1;

  void validate() const;
};

struct MethodScore {
  double recall = 0.0;  // percent, mean over test points
  std::optional<double> mfi;  // mean over test points
  Index points = 0;
  Index failures = 0;
  std::string first_error;
};

struct CellResult {
  std::string dataset;
  std::string model;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  Index dim = 0;
  Index m = 0;
  std::vector<Index> gold;
  double test_accuracy = 0.0;
  Index test_points = 0;
  std::map<EvalMethod, MethodScore> scores;
  // method -> (k, recall percent)
  std::map<EvalMethod, std::vector<std::pair<Index, double>>> k_curve;

  nlohmann::json to_json() const;
};

struct EvalReport {
  std::vector<CellResult> cells;
  nlohmann::json config;

  bool all_ok() const;
  // Mean over seeds for one (dataset, model, method); nullopt if no cell has it.
  std::optional<double> mean_recall(const std::string& dataset, const std::string& model,
                                    EvalMethod method) const;

  std::string to_csv() const;
  nlohmann::json to_json() const;
  // Rows (dataset, model), one column per method, recall averaged over seeds.
  std::string recall_table_tsv() const;
  std::string mfi_table_tsv() const;
  std::string k_curve_tsv() const;
};

// Recall curve of the AVA methods over k for the given test points. Each
// point's influence ranking is computed once and truncated for every k.
std::map<EvalMethod, std::vector<std::pair<Index, double>>> k_sweep(
    const Explainer& explainer, const Dataset& test, const GoldSet& gold,
    const std::vector<Index>& k_values, const std::vector<EvalMethod>& methods);

// Evaluates one (dataset, model, seed) cell.
CellResult run_cell(const DatasetSpec& dataset, const ModelSpec& model, std::uint64_t seed,
                    const BenchmarkConfig& config);

// Full cross product; cells run on `config.jobs` workers and failures are
// recorded per cell.
EvalReport run_benchmark(const BenchmarkConfig& config);

}  // namespace ava
