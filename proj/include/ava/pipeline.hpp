#pragma once

#include "ava/models.hpp"

#include <optional>
#include <set>
#include <string>

namespace ava {

// Where a dataset comes from and how it is encoded. Exactly one of `path`
// and `synthetic` is set.
struct DatasetSpec {
  std::string name;
  std::string path;
  std::optional<SyntheticSpec> synthetic;
  std::string label_column;
  std::set<std::string> categorical_columns;
  std::set<std::string> drop_columns;
  double test_fraction = 0.33;

  void validate() const;
};

struct ModelSpec {
  ModelKind kind = ModelKind::mlp;
  TrainConfig mlp;
  SvmConfig svm;
  LinearConfig linear;
  Index n_neighbors = 5;
  double knn_temperature = 0.1;
  TreeConfig tree;

  std::string label() const;  // "mlp-sigmoid", "svm_rbf", ...
  void validate() const;
};

RawDataset load_raw(const DatasetSpec& spec);

// Reads (or generates) the table and returns the seeded train/test split
// with preprocessing fitted on the training side.
SplitDataset load_dataset(const DatasetSpec& spec, std::uint64_t seed);

PredictorPtr train_model(const ModelSpec& spec, const Dataset& train, std::uint64_t seed,
                         TrainingLog* log = nullptr);

double accuracy(const Predictor& model, const Dataset& data);

}  // namespace ava
