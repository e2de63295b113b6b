#pragma once

#include "ava/predictor.hpp"

namespace ava {

// Distance-weighted softmax over all stored points:
//   p(c | x) = sum_i s_i [y_i = c],   s = softmax(-|x - x_i|^2 / temperature).
// As temperature -> 0 this becomes the 1-nearest-neighbour rule.
class SoftKnn final : public Predictor {
 public:
  SoftKnn(Matrix points, Vector labels, Index num_classes, double temperature);

  ModelKind kind() const override { return ModelKind::soft_knn; }
  Capabilities capabilities() const override { return {true, false, false}; }
  Index input_dim() const override { return points_.rows(); }
  Index output_dim() const override { return classes_; }
  double temperature() const { return temperature_; }

  // Kernel weights s_i for a query.
  Vector weights(const Vector& x) const;

  // d/d eps of -log p(y_test | x_test) when stored point j has its kernel
  // weight scaled by (1 + eps); one entry per stored point.
  bool has_upweight_influence() const override { return true; }
  Vector upweight_influence(const Vector& x_test, double y_test) const override;

  nlohmann::json to_json() const override;

 protected:
  Vector do_predict(const Vector& x) const override;
  Vector do_grad_input(const Vector& x, Index output) const override;

 private:
  Matrix points_;
  Vector labels_;
  Index classes_;
  double temperature_;
};

// Majority vote among the n_neighbors nearest stored points (Euclidean).
// Equal distances keep the lower stored index; tied votes resolve to the
// smaller class index through argmax. predict() returns vote fractions.
class Knn final : public Predictor {
 public:
  Knn(Matrix points, Vector labels, Index num_classes, Index n_neighbors, double temperature);

  ModelKind kind() const override { return ModelKind::knn; }
  Capabilities capabilities() const override { return {}; }
  Index input_dim() const override { return points_.rows(); }
  Index output_dim() const override { return classes_; }
  Index n_neighbors() const { return n_neighbors_; }

  const Predictor* surrogate() const override { return &soft_; }

  std::vector<Index> neighbors(const Vector& x) const;

  nlohmann::json to_json() const override;
  static std::unique_ptr<Knn> from_json(const nlohmann::json& j);

 protected:
  Vector do_predict(const Vector& x) const override;

 private:
  Matrix points_;
  Vector labels_;
  Index classes_;
  Index n_neighbors_;
  SoftKnn soft_;
};

std::unique_ptr<Knn> train_knn(const Dataset& train, Index n_neighbors, double temperature = 0.1);

}  // namespace ava
