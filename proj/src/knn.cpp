#include "ava/knn.hpp"

#include <algorithm>
#include <numeric>

namespace ava {

namespace {

std::vector<double> to_std(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

SoftKnn::SoftKnn(Matrix points, Vector labels, Index num_classes, double temperature)
    : points_(std::move(points)),
      labels_(std::move(labels)),
      classes_(num_classes),
      temperature_(temperature) {
  if (!(temperature_ > 0)) throw ConfigError("soft-kNN temperature must be > 0");
  if (points_.cols() == 0) throw DataError("soft-kNN needs at least one stored point");
}

Vector SoftKnn::weights(const Vector& x) const {
  const Vector d2 = (points_.colwise() - x).colwise().squaredNorm();
  return softmax(-d2 / temperature_);
}

Vector SoftKnn::do_predict(const Vector& x) const {
  const Vector s = weights(x);
  Vector p = Vector::Zero(classes_);
  for (Index i = 0; i < s.size(); ++i) p(static_cast<Index>(labels_(i))) += s(i);
  return p;
}

Vector SoftKnn::do_grad_input(const Vector& x, Index output) const {
  const Vector s = weights(x);
  const Vector p = do_predict(x);
  // d s_i / dx = s_i (g_i - sum_k s_k g_k), g_i = -2 (x - x_i) / temperature,
  // so d p_c / dx = sum_i s_i ([y_i = c] - p_c) g_i.
  Vector grad = Vector::Zero(x.size());
  for (Index i = 0; i < s.size(); ++i) {
    const double coef = s(i) * ((static_cast<Index>(labels_(i)) == output ? 1.0 : 0.0) - p(output));
    if (coef == 0.0) continue;
    grad += coef * (-2.0 / temperature_) * (x - points_.col(i));
  }
  return grad;
}

Vector SoftKnn::upweight_influence(const Vector& x_test, double y_test) const {
  if (x_test.size() != input_dim()) throw DataError("dimension mismatch");
  const Vector s = weights(x_test);
  const auto y = static_cast<Index>(y_test);
  double p = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    if (static_cast<Index>(labels_(i)) == y) p += s(i);
  }
  p = std::max(p, 1e-300);
  // p_eps = (num + eps s_j [y_j = y]) / (1 + eps s_j)
  // => d(-log p_eps)/d eps = s_j (1 - [y_j = y] / p)
  Vector out(s.size());
  for (Index j = 0; j < s.size(); ++j) {
    out(j) = s(j) * (1.0 - (static_cast<Index>(labels_(j)) == y ? 1.0 / p : 0.0));
  }
  return out;
}

nlohmann::json SoftKnn::to_json() const {
  return {{"kind", "soft_knn"},
          {"temperature", temperature_},
          {"dim", points_.rows()},
          {"num_points", points_.cols()},
          {"num_classes", classes_},
          {"points", to_std(points_)},
          {"labels", to_std(labels_)}};
}

Knn::Knn(Matrix points, Vector labels, Index num_classes, Index n_neighbors, double temperature)
    : points_(points),
      labels_(labels),
      classes_(num_classes),
      n_neighbors_(n_neighbors),
      soft_(std::move(points), std::move(labels), num_classes, temperature) {
  if (n_neighbors_ < 1) throw ConfigError("n_neighbors must be >= 1");
  if (n_neighbors_ > points_.cols()) {
    throw ConfigError("n_neighbors (" + std::to_string(n_neighbors_) +
                      ") exceeds the number of training points");
  }
}

std::vector<Index> Knn::neighbors(const Vector& x) const {
  const Vector d2 = (points_.colwise() - x).colwise().squaredNorm();
  std::vector<Index> order(points_.cols());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d2(a) < d2(b); });
  order.resize(n_neighbors_);
  return order;
}

Vector Knn::do_predict(const Vector& x) const {
  Vector votes = Vector::Zero(classes_);
  for (Index i : neighbors(x)) votes(static_cast<Index>(labels_(i))) += 1.0;
  return votes / static_cast<double>(n_neighbors_);
}

nlohmann::json Knn::to_json() const {
  return {{"kind", "knn"},
          {"n_neighbors", n_neighbors_},
          {"temperature", soft_.temperature()},
          {"dim", points_.rows()},
          {"num_points", points_.cols()},
          {"num_classes", classes_},
          {"points", to_std(points_)},
          {"labels", to_std(labels_)}};
}

std::unique_ptr<Knn> Knn::from_json(const nlohmann::json& j) {
  const auto pts = j.at("points").get<std::vector<double>>();
  const auto lab = j.at("labels").get<std::vector<double>>();
  return std::make_unique<Knn>(
      Eigen::Map<const Matrix>(pts.data(), j.at("dim").get<Index>(), j.at("num_points").get<Index>()),
      Eigen::Map<const Vector>(lab.data(), static_cast<Index>(lab.size())),
      j.at("num_classes").get<Index>(), j.at("n_neighbors").get<Index>(),
      j.at("temperature").get<double>());
}

std::unique_ptr<Knn> train_knn(const Dataset& train, Index n_neighbors, double temperature) {
  if (n_neighbors > train.size()) {
    throw ConfigError("n_neighbors must not exceed the number of training points");
  }
  return std::make_unique<Knn>(train.features, train.labels,
                               train.class_count(), n_neighbors, temperature);
}

}  // namespace ava
