#pragma once

#include "ava/knn.hpp"
#include "ava/linear.hpp"
#include "ava/mlp.hpp"
#include "ava/predictor.hpp"
#include "ava/svm.hpp"
#include "ava/tree.hpp"

#include <filesystem>

namespace ava {

inline constexpr int kCheckpointVersion = 1;

// Rebuild any predictor from its to_json() blob.
PredictorPtr predictor_from_json(const nlohmann::json& j);

struct Checkpoint {
  int version = kCheckpointVersion;
  PredictorPtr model;
  PreprocessingRecord preprocessing;
  nlohmann::json extra;  // resolved run config, training log, ...
};

nlohmann::json checkpoint_to_json(const Predictor& model, const PreprocessingRecord& pre,
                                  const nlohmann::json& extra = nlohmann::json::object());
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Predictor& model,
                     const PreprocessingRecord& pre,
                     const nlohmann::json& extra = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ava
