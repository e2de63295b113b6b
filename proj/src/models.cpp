#include "ava/models.hpp"

#include <fstream>

namespace ava {

PredictorPtr predictor_from_json(const nlohmann::json& j) {
  switch (model_kind_from_string(j.at("kind").get<std::string>())) {
    case ModelKind::linear:
      return LinearModel::from_json(j);
    case ModelKind::mlp:
      return Mlp::from_json(j);
    case ModelKind::svm_rbf:
      return RbfSvm::from_json(j);
    case ModelKind::knn:
      return Knn::from_json(j);
    case ModelKind::decision_tree:
      return DecisionTree::from_json(j);
    case ModelKind::soft_knn:
      break;
  }
  throw ConfigError("soft_knn is a surrogate and cannot be loaded on its own");
}

nlohmann::json checkpoint_to_json(const Predictor& model, const PreprocessingRecord& pre,
                                  const nlohmann::json& extra) {
  return {{"format", "ava-checkpoint"},
          {"version", kCheckpointVersion},
          {"model", model.to_json()},
          {"preprocessing", pre.to_json()},
          {"extra", extra}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ava-checkpoint") throw DataError("not an ava checkpoint");
  const int version = j.at("version").get<int>();
  if (version > kCheckpointVersion) {
    throw DataError("checkpoint version " + std::to_string(version) +
                    " is newer than supported version " + std::to_string(kCheckpointVersion));
  }
  Checkpoint c;
  c.version = version;
  c.model = predictor_from_json(j.at("model"));
  c.preprocessing = PreprocessingRecord::from_json(j.at("preprocessing"));
  c.extra = j.value("extra", nlohmann::json::object());
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Predictor& model,
                     const PreprocessingRecord& pre, const nlohmann::json& extra) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(model, pre, extra).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace ava
