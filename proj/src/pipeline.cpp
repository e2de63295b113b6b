#include "ava/pipeline.hpp"

namespace ava {

void DatasetSpec::validate() const {
  if (path.empty() == !synthetic.has_value()) {
    throw ConfigError("dataset '" + name + "' needs exactly one of path and synthetic");
  }
  if (!synthetic && label_column.empty()) {
    throw ConfigError("dataset '" + name + "' has no label column");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
}

std::string ModelSpec::label() const {
  std::string s(to_string(kind));
  if (kind == ModelKind::mlp) s += "-" + std::string(to_string(mlp.activation));
  return s;
}

void ModelSpec::validate() const {
  switch (kind) {
    case ModelKind::mlp:
      mlp.validate();
      break;
    case ModelKind::svm_rbf:
      if (!(svm.c > 0) || !(svm.gamma > 0)) throw ConfigError("svm c and gamma must be > 0");
      break;
    case ModelKind::knn:
      if (n_neighbors < 1) throw ConfigError("n_neighbors must be >= 1");
      if (!(knn_temperature > 0)) throw ConfigError("knn temperature must be > 0");
      break;
    case ModelKind::linear:
      if (linear.l2 < 0) throw ConfigError("l2 must be >= 0");
      break;
    case ModelKind::decision_tree:
      if (tree.max_features < 0 || tree.max_depth < 0) {
        throw ConfigError("tree limits must be >= 0");
      }
      break;
    case ModelKind::soft_knn:
      throw ConfigError("soft_knn is a surrogate, train knn instead");
  }
}

RawDataset load_raw(const DatasetSpec& spec) {
  spec.validate();
  if (spec.synthetic) return make_synthetic(*spec.synthetic);
  return load_csv(spec.path, spec.label_column);
}

SplitDataset load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  const RawDataset raw = load_raw(spec);
  PreprocessConfig pre;
  pre.categorical_columns = spec.categorical_columns;
  pre.drop_columns = spec.drop_columns;
  return prepare_split(raw, pre, spec.test_fraction, seed);
}

PredictorPtr train_model(const ModelSpec& spec, const Dataset& train, std::uint64_t seed,
                         TrainingLog* log) {
  spec.validate();
  switch (spec.kind) {
    case ModelKind::mlp: {
      TrainConfig c = spec.mlp;
      c.seed = seed;
      return train_mlp(train, c, log);
    }
    case ModelKind::svm_rbf:
      return train_svm_rbf(train, spec.svm);
    case ModelKind::knn:
      return train_knn(train, spec.n_neighbors, spec.knn_temperature);
    case ModelKind::linear:
      return train_linear(train, spec.linear);
    case ModelKind::decision_tree:
      return train_decision_tree(train, spec.tree);
    case ModelKind::soft_knn:
      break;
  }
  throw ConfigError("cannot train " + std::string(to_string(spec.kind)));
}

double accuracy(const Predictor& model, const Dataset& data) {
  if (data.size() == 0) throw DataError("accuracy of an empty dataset");
  Index hits = 0;
  for (Index j = 0; j < data.size(); ++j) {
    if (model.predicted_class(data.point(j)) == data.label(j)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace ava
