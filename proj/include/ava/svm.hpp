#pragma once

#include "ava/predictor.hpp"

namespace ava {

struct SvmConfig {
  double c = 1.0;
  double gamma = 0.5;
  double tol = 1e-8;
  int max_iter = 100;
};

// One-vs-rest RBF kernel SVM trained in the primal with the squared hinge
// loss. Class c has the decision function
//   f_c(x) = sum_i alpha_ci K(x_i, x) + b_c,   K(u, v) = exp(-gamma |u - v|^2)
// and the training objective is
//   mean_i sum_c max(0, 1 - y_ic f_c(x_i))^2 + 1/(2 C N) sum_c alpha_c' K alpha_c.
// The squared hinge is C^1, so parameter gradients exist everywhere and the
// generalized Hessian serves for Hessian-vector products. predict() is the
// softmax of the decision values.
class RbfSvm final : public Predictor {
 public:
  RbfSvm(SvmConfig config, Matrix support, Index num_classes, Vector theta);

  ModelKind kind() const override { return ModelKind::svm_rbf; }
  Capabilities capabilities() const override { return {true, true, true}; }
  Index input_dim() const override { return support_.rows(); }
  Index output_dim() const override { return classes_; }
  const Vector& parameters() const override { return theta_; }

  Vector decision_function(const Vector& x) const;
  const SvmConfig& config() const { return config_; }

  nlohmann::json to_json() const override;
  static std::unique_ptr<RbfSvm> from_json(const nlohmann::json& j);

 protected:
  Vector do_predict(const Vector& x) const override;
  Vector do_grad_input(const Vector& x, Index output) const override;
  double do_loss(const Vector& x, double y) const override;
  Vector do_grad_params(const Vector& x, double y) const override;
  Vector do_hvp(const Dataset& data, const Vector& v) const override;

 private:
  Vector kernel_row(const Vector& x) const;
  Index block() const { return support_.cols() + 1; }

  SvmConfig config_;
  Matrix support_;  // training points as columns
  Matrix gram_;
  Index classes_;
  Vector theta_;  // per class: alpha (N), then b
};

std::unique_ptr<RbfSvm> train_svm_rbf(const Dataset& train, const SvmConfig& config);

}  // namespace ava
