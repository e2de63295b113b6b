#pragma once

#include "ava/attribution.hpp"
#include "ava/influence.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <vector>

namespace ava {

enum class ConsensusMethod { ava_shap, ava_ig };
enum class IgBaseline { neighborhood_mean, zero, training_mean, fixed };

std::string_view to_string(ConsensusMethod m);
std::string_view to_string(IgBaseline b);
IgBaseline ig_baseline_from_string(std::string_view name);

struct AvaConfig {
  Index k = 10;
  WeightMode weight_mode = WeightMode::abs;
  ZeroWeightPolicy zero_policy = ZeroWeightPolicy::uniform;
  SolverConfig solver;
  Index shap_exact_cap = 12;  // larger d switches to permutation sampling
  Index shap_samples = 2000;
  int ig_steps = 256;
  IgBaseline ig_baseline = IgBaseline::neighborhood_mean;
  Vector fixed_baseline;  // used with IgBaseline::fixed
  std::optional<Index> target_class;  // default: predicted class of x_test
  bool include_test_point = false;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

struct ConsensusAttribution {
  Vector values;
  ConsensusMethod method = ConsensusMethod::ava_shap;
  Index test_point_id = -1;
  Index output = 0;
  Neighborhood neighborhood;
  std::vector<Attribution> per_point;  // one per neighbor, in neighborhood order
  Vector normalized_weights;  // rho_j / rho, aligned with per_point
  Vector baseline;  // IG baseline x0 (ava_ig only)
  nlohmann::json config;

  nlohmann::json to_json() const;
};

// sum_j (rho_j / rho) g^j with rho = sum_j rho_j. Every coordinate of the
// result is kept inside [min_j g^j_i, max_j g^j_i].
Vector aggregate_weighted(const std::vector<Vector>& attributions, const Vector& weights);

// Binds a trained model and its training set. Training-point attributions
// are cached per (training index, output), so repeated explanations and k
// sweeps reuse them.
class Explainer {
 public:
  Explainer(const Predictor& model, const Dataset& train, AvaConfig config);

  const AvaConfig& config() const { return config_; }
  const Dataset& train() const { return train_; }
  const Vector& background() const { return background_; }

  Index target_output(const Vector& x_test) const;

  InfluenceWeights influence_weights(const Vector& x_test, double y_test,
                                     Index test_point_id = -1) const;
  Neighborhood neighborhood(const InfluenceWeights& weights, Index k) const;

  ConsensusAttribution ava_shap(const Vector& x_test, double y_test,
                                Index test_point_id = -1) const;
  ConsensusAttribution ava_ig(const Vector& x_test, double y_test,
                              Index test_point_id = -1) const;
  // Consensus over a neighborhood that was already selected.
  ConsensusAttribution consensus(ConsensusMethod method, const Vector& x_test,
                                 const Neighborhood& nb, Index output,
                                 Index test_point_id = -1) const;

  // Plain baselines at x_test: Shapley with the training-mean background,
  // IG from the zero vector.
  Attribution shap(const Vector& x_test, Index output, Index test_point_id = -1) const;
  Attribution ig(const Vector& x_test, Index output, Index test_point_id = -1) const;

 private:
  Attribution shapley_at(const Vector& x, Index output, Index id, std::uint64_t stream) const;
  Attribution ig_at(const Vector& x, const Vector& baseline, Index output, Index id) const;
  const Attribution& cached_shapley(Index j, Index output) const;
  const InfluenceEngine& engine() const;

  const Predictor& model_;
  const Dataset& train_;
  AvaConfig config_;
  Vector background_;
  const Predictor* gradient_model_ = nullptr;
  std::optional<InfluenceEngine> engine_;
  std::string engine_error_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<Index, Index>, Attribution> shap_cache_;
};

ConsensusAttribution ava_shap(const Predictor& model, const Vector& x_test, double y_test,
                              const Dataset& train, const AvaConfig& config);
ConsensusAttribution ava_ig(const Predictor& model, const Vector& x_test, double y_test,
                            const Dataset& train, const AvaConfig& config);

}  // namespace ava
