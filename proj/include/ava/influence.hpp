#pragma once

#include "ava/predictor.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace ava {

enum class WeightMode { abs, clamp_positive, signed_topk };
enum class SolverMethod { exact, cg };
enum class ZeroWeightPolicy { error, uniform };

std::string_view to_string(WeightMode m);
WeightMode weight_mode_from_string(std::string_view name);
std::string_view to_string(SolverMethod m);
SolverMethod solver_method_from_string(std::string_view name);

struct SolverConfig {
  SolverMethod method = SolverMethod::cg;
  double damping = 0.01;
  double tol = 1e-6;  // relative residual
  int max_iter = 0;  // 0 selects 10 * p
  Index exact_cap = 2000;
};

struct SolveResult {
  Vector solution;
  int iterations = 0;
  double relative_residual = 0.0;
};

using LinearOperator = std::function<Vector(const Vector&)>;

// Conjugate gradients for a symmetric positive definite operator. Throws
// ConvergenceError on non-positive curvature or when max_iter is exhausted.
SolveResult conjugate_gradient(const LinearOperator& op, const Vector& b, double tol,
                               int max_iter);

// Dense (H + damping I), assembled column by column from Hessian-vector
// products.
Matrix explicit_hessian(const Predictor& model, const Dataset& train, double damping);

// Solves (H + damping I) v = b. In exact mode the dense matrix is factorized
// once at construction and reused for every right-hand side.
class InverseHvp {
 public:
  InverseHvp(const Predictor& model, const Dataset& train, SolverConfig config);

  SolveResult solve(const Vector& b) const;
  const SolverConfig& config() const { return config_; }

 private:
  const Predictor& model_;
  const Dataset& train_;
  SolverConfig config_;
  std::optional<Eigen::PartialPivLU<Matrix>> lu_;
};

Vector inverse_hvp(const Predictor& model, const Dataset& train, const Vector& b,
                   const SolverConfig& config);

// Influence of upweighting training point j on the test loss:
//   I(j) = -grad L(x_test)' (H + damping I)^-1 grad L(x_j),
// computed from scratch (no caching).
double influence_up_loss(const Predictor& model, const Dataset& train, Index j,
                         const Vector& x_test, double y_test, const SolverConfig& config);

// Influence of every training point on one test point. Per-example training
// gradients are computed once; the test-side solve happens once per call.
// Models without parameter gradients fall back to their (or their
// surrogate's) direct upweighting derivative.
class InfluenceEngine {
 public:
  InfluenceEngine(const Predictor& model, const Dataset& train, SolverConfig config);

  Vector influences(const Vector& x_test, double y_test) const;
  // Same value as influences()(j) but recomputed without any shared state.
  double influence(Index j, const Vector& x_test, double y_test) const;

  bool uses_surrogate() const { return upweight_model_ != nullptr; }
  Index num_train() const { return train_.size(); }

 private:
  const Predictor& model_;
  const Dataset& train_;
  SolverConfig config_;
  const Predictor* upweight_model_ = nullptr;
  std::optional<InverseHvp> solver_;
  Matrix train_grads_;  // p x N
};

struct InfluenceWeights {
  Vector raw;
  Vector rectified;  // always >= 0
  WeightMode mode = WeightMode::abs;
  Index test_point_id = -1;
};

Vector rectify_weights(const Vector& raw, WeightMode mode);
InfluenceWeights make_influence_weights(Vector raw, WeightMode mode, Index test_point_id = -1);

struct Neighborhood {
  std::vector<Index> indices;
  Vector weights;
  double normalizer = 0.0;
  bool uniform_fallback = false;

  Index size() const { return static_cast<Index>(indices.size()); }
  Vector normalized_weights() const { return weights / normalizer; }
};

class ZeroInfluenceError : public Error {
 public:
  using Error::Error;
};

// All training indices ordered by selection priority: rectified weight (raw
// value for signed_topk) descending, then index ascending.
std::vector<Index> rank_by_influence(const InfluenceWeights& weights);

// Top-k by the ranking above. A zero normalizer throws ZeroInfluenceError
// under ZeroWeightPolicy::error and gives every selected point weight 1
// under ZeroWeightPolicy::uniform.
Neighborhood select_neighborhood(const InfluenceWeights& weights, Index k,
                                 ZeroWeightPolicy policy = ZeroWeightPolicy::error);
// Same selection from a ranking already produced by rank_by_influence.
Neighborhood select_neighborhood(const InfluenceWeights& weights, const std::vector<Index>& ranking,
                                 Index k, ZeroWeightPolicy policy = ZeroWeightPolicy::error);

using Trainer = std::function<PredictorPtr(const Dataset&)>;

// Actual change of test loss when training point j is removed and the model
// is retrained: L(f_{-j}, x_test) - L(f, x_test).
double loo_influence_oracle(const Trainer& trainer, const Dataset& train, Index j,
                            const Vector& x_test, double y_test);

// The oracle for every training point, sharing the full-data fit.
Vector loo_influence_oracle_all(const Trainer& trainer, const Dataset& train,
                                const Vector& x_test, double y_test);

// First-order prediction of the same quantity: removing a point is
// upweighting by eps = -1/N, so the change is -I(j) / N.
inline double predicted_removal_effect(double influence, Index n) {
  return -influence / static_cast<double>(n);
}

}  // namespace ava
