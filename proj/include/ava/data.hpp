#pragma once

#include "ava/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ava {

// Tabular data exactly as read from disk. Cells are column-major and a
// missing cell (empty, "?", "NA", "nan") is stored as std::nullopt.
struct RawDataset {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::optional<std::string>>> columns;
  std::string label_name;
  std::vector<std::string> labels;

  Index num_rows() const { return static_cast<Index>(labels.size()); }
  Index num_columns() const { return static_cast<Index>(column_names.size()); }
  Index column_index(const std::string& name) const;
  RawDataset select_rows(const std::vector<Index>& rows) const;
};

enum class ColumnKind { numeric, categorical };

struct ColumnTransform {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  double mean = 0.0;
  double scale = 1.0;
  std::vector<std::string> levels;
};

// Per-column transforms fitted on training rows. Applying it to any raw
// table with the same schema yields the model's input space.
struct PreprocessingRecord {
  std::vector<ColumnTransform> columns;
  std::vector<std::string> class_names;

  std::vector<std::string> feature_names() const;
  Index encoded_dim() const;

  nlohmann::json to_json() const;
  static PreprocessingRecord from_json(const nlohmann::json& j);
};

// Columns are points: features(i, j) is feature i of point j.
struct Dataset {
  Matrix features;
  Vector labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<Index> row_ids;
  PreprocessingRecord preprocessing;

  Index dim() const { return features.rows(); }
  Index size() const { return features.cols(); }
  Index num_classes() const { return static_cast<Index>(class_names.size()); }
  // Number of classes implied by the names or, failing that, the labels.
  Index class_count() const;
  int label(Index j) const { return static_cast<int>(labels(j)); }
  auto point(Index j) const { return features.col(j); }

  Dataset subset(const std::vector<Index>& cols) const;
  Vector feature_mean() const;

  // Throws DataError when an invariant is broken.
  void validate() const;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
};

struct PreprocessConfig {
  std::set<std::string> categorical_columns;
  std::set<std::string> drop_columns;
};

// RFC-4180 reader. When header is false the columns are named c0, c1, ...
RawDataset load_csv(const std::filesystem::path& path,
                    const std::string& label_column, bool header = true);

class Preprocessor {
 public:
  // class_names fixes the label encoding; when empty it is taken from the
  // sorted distinct labels of `train`.
  static Preprocessor fit(const RawDataset& train, const PreprocessConfig& config,
                          std::vector<std::string> class_names = {});
  explicit Preprocessor(PreprocessingRecord record) : record_(std::move(record)) {}

  Dataset transform(const RawDataset& raw) const;
  const PreprocessingRecord& record() const { return record_; }

 private:
  PreprocessingRecord record_;
};

// Fit on `raw` and transform it in one step.
Dataset preprocess(const RawDataset& raw, const PreprocessConfig& config);

// Deterministic partition of 0..n-1 into (train, test) index lists.
std::pair<std::vector<Index>, std::vector<Index>> split_indices(Index n, double test_fraction,
                                                                std::uint64_t seed);

SplitDataset split(const Dataset& data, double test_fraction, std::uint64_t seed);

// Split raw rows, fit preprocessing on the training side only, then
// transform both sides with the training statistics.
SplitDataset prepare_split(const RawDataset& raw, const PreprocessConfig& config,
                           double test_fraction, std::uint64_t seed);

struct SyntheticSpec {
  Index num_points = 300;
  Index num_features = 8;
  Index num_informative = 3;
  double noise = 0.5;
  std::uint64_t seed = 0;
};

// Binary task where only the first num_informative columns carry signal:
// label = [sum_i w_i x_i + noise > 0] with decreasing weights w_i.
RawDataset make_synthetic(const SyntheticSpec& spec);

}  // namespace ava
