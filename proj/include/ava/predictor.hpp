#pragma once

#include "ava/data.hpp"
#include "ava/types.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <string_view>

namespace ava {

enum class ModelKind { linear, mlp, svm_rbf, knn, soft_knn, decision_tree };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct Capabilities {
  bool input_gradient = false;
  bool param_gradient = false;
  bool hvp = false;
};

// Common contract for every trained model. The public entry points check
// shapes and capability flags, then dispatch to the do_* hooks; a model
// that lacks a capability never reaches its hook.
//
// Classifier outputs are class probabilities; regressors return a single
// real score. The per-example training loss and its derivatives are with
// respect to the flat parameter vector returned by parameters().
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual ModelKind kind() const = 0;
  virtual Capabilities capabilities() const = 0;
  virtual Index input_dim() const = 0;
  virtual Index output_dim() const = 0;
  virtual bool is_classifier() const { return true; }

  Vector predict(const Vector& x) const;
  // Gradient of output `output` with respect to the input point.
  Vector grad_input(const Vector& x, Index output) const;
  // Per-example training loss at (x, y) and its parameter gradient.
  double loss(const Vector& x, double y) const;
  Vector grad_params(const Vector& x, double y) const;
  // (H + damping I) v, with H the Hessian of the mean training objective
  // over `data` at the current parameters.
  Vector hvp(const Dataset& data, const Vector& v, double damping) const;

  // Flat parameter vector; empty for nonparametric models.
  virtual const Vector& parameters() const;
  Index num_parameters() const { return parameters().size(); }

  // Index of the largest output; ties go to the smaller index.
  Index predicted_class(const Vector& x) const;

  // Smooth stand-in used where this model has no gradients (hard kNN).
  virtual const Predictor* surrogate() const { return nullptr; }

  // Models without parameters may still define the derivative of the test
  // loss with respect to upweighting each training point directly.
  virtual bool has_upweight_influence() const { return false; }
  virtual Vector upweight_influence(const Vector& x_test, double y_test) const;

  virtual nlohmann::json to_json() const = 0;

 protected:
  virtual Vector do_predict(const Vector& x) const = 0;
  virtual Vector do_grad_input(const Vector& x, Index output) const;
  virtual double do_loss(const Vector& x, double y) const;
  virtual Vector do_grad_params(const Vector& x, double y) const;
  virtual Vector do_hvp(const Dataset& data, const Vector& v) const;

 private:
  void check_point(const Vector& x) const;
};

using PredictorPtr = std::unique_ptr<Predictor>;

// Stable argmax with lowest-index tie break.
Index argmax(const Vector& v);

// Numerically stable softmax.
Vector softmax(const Vector& z);

}  // namespace ava
