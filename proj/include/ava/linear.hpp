#pragma once

#include "ava/predictor.hpp"

namespace ava {

enum class LinearLink {
  logistic,  // binary classifier, cross-entropy loss
  identity,  // regressor, squared loss (w.x + b - y)^2
};

struct LinearConfig {
  LinearLink link = LinearLink::logistic;
  bool intercept = true;
  double l2 = 1e-3;  // objective adds l2/2 * |theta|^2
  double tol = 1e-12;
  int max_iter = 100;
};

// Linear model with parameters theta = (w, b). The training objective is
// mean_j loss(x_j, y_j) + l2/2 |theta|^2 and is minimized exactly (Newton for
// the logistic link, normal equations for the identity link).
class LinearModel final : public Predictor {
  friend std::unique_ptr<LinearModel> train_linear(const Dataset&, const LinearConfig&);

 public:
  LinearModel(LinearConfig config, Index dim, Vector theta);

  ModelKind kind() const override { return ModelKind::linear; }
  Capabilities capabilities() const override { return {true, true, true}; }
  Index input_dim() const override { return dim_; }
  Index output_dim() const override { return config_.link == LinearLink::logistic ? 2 : 1; }
  bool is_classifier() const override { return config_.link == LinearLink::logistic; }
  const Vector& parameters() const override { return theta_; }

  const LinearConfig& config() const { return config_; }
  double score(const Vector& x) const;
  // Gradient of the full training objective.
  Vector objective_gradient(const Dataset& data) const;
  double objective(const Dataset& data) const;

  nlohmann::json to_json() const override;
  static std::unique_ptr<LinearModel> from_json(const nlohmann::json& j);

 protected:
  Vector do_predict(const Vector& x) const override;
  Vector do_grad_input(const Vector& x, Index output) const override;
  double do_loss(const Vector& x, double y) const override;
  Vector do_grad_params(const Vector& x, double y) const override;
  Vector do_hvp(const Dataset& data, const Vector& v) const override;

 private:
  Vector augmented(const Vector& x) const;

  LinearConfig config_;
  Index dim_;
  Vector theta_;
};

std::unique_ptr<LinearModel> train_linear(const Dataset& train, const LinearConfig& config);

}  // namespace ava
