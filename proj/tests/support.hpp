#pragma once

#include "ava/aggregation.hpp"
#include "ava/config.hpp"
#include "ava/evaluation.hpp"
#include "ava/models.hpp"
#include "ava/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace test {

using ava::Index;
using ava::Matrix;
using ava::Vector;

inline std::filesystem::path source_dir() { return AVA_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& name) {
  return source_dir() / "tests" / "fixtures" / name;
}

// Columns of X are points.
inline ava::Dataset make_dataset(const Matrix& X, const Vector& y, Index n_classes = 2) {
  ava::Dataset d;
  d.features = X;
  d.labels = y;
  for (Index i = 0; i < X.rows(); ++i) d.feature_names.push_back("f" + std::to_string(i));
  for (Index c = 0; c < n_classes; ++c) d.class_names.push_back("c" + std::to_string(c));
  for (Index j = 0; j < X.cols(); ++j) d.row_ids.push_back(j);
  return d;
}

inline Vector random_vector(std::mt19937_64& rng, Index n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

// Two-class problem with a linear rule on the first `informative` columns.
inline ava::Dataset linear_blobs(Index n, Index d, std::uint64_t seed, double noise = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix X(d, n);
  Vector y(n);
  for (Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Index i = 0; i < d; ++i) {
      X(i, j) = g(rng);
      s += X(i, j) / static_cast<double>(i + 1);
    }
    y(j) = s + noise * g(rng) > 0.0 ? 1.0 : 0.0;
  }
  return make_dataset(X, y, 2);
}

inline ava::DatasetSpec iris_spec() {
  ava::DatasetSpec s;
  s.name = "iris";
  s.path = (source_dir() / "data" / "iris.csv").string();
  s.label_column = "species";
  s.test_fraction = 0.33;
  return s;
}

inline ava::ModelSpec sigmoid_mlp(int epochs) {
  ava::ModelSpec m;
  m.kind = ava::ModelKind::mlp;
  m.mlp.activation = ava::Activation::sigmoid;
  m.mlp.epochs = epochs;
  return m;
}

// Central finite-difference gradient of a scalar function.
template <class F>
Vector fd_gradient(F&& f, const Vector& at, double h = 1e-5) {
  Vector g(at.size());
  for (Index i = 0; i < at.size(); ++i) {
    Vector a = at, b = at;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

inline double pearson(const Vector& a, const Vector& b) {
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

inline Vector ranks(const Vector& v) {
  std::vector<Index> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) < v(b); });
  Vector r(v.size());
  for (Index i = 0; i < v.size();) {
    Index j = i;
    while (j + 1 < v.size() && v(order[j + 1]) == v(order[i])) ++j;
    for (Index t = i; t <= j; ++t) r(order[t]) = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

inline double spearman(const Vector& a, const Vector& b) { return pearson(ranks(a), ranks(b)); }

inline int popcount(std::uint64_t m) { return __builtin_popcountll(m); }

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Shapley values straight from the weighted-marginal definition.
inline Vector shapley_oracle(const std::vector<double>& v, Index d) {
  Vector phi = Vector::Zero(d);
  const std::uint64_t full = (std::uint64_t{1} << d) - 1;
  for (Index i = 0; i < d; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      const int k = popcount(s);
      const double w = factorial(k) * factorial(static_cast<int>(d) - k - 1) /
                       factorial(static_cast<int>(d));
      phi(i) += w * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

// Shapley values through the dividend form sum_{S containing i} D(S)/|S|,
// with D computed by explicit inclusion-exclusion.
inline Vector shapley_from_dividends(const std::vector<double>& v, Index d) {
  const std::uint64_t full = (std::uint64_t{1} << d) - 1;
  Vector phi = Vector::Zero(d);
  for (std::uint64_t s = 1; s <= full; ++s) {
    double D = 0.0;
    for (std::uint64_t t = 0; t <= full; ++t) {
      if ((t & ~s) != 0) continue;
      D += ((popcount(s) - popcount(t)) % 2 ? -1.0 : 1.0) * v[t];
    }
    for (Index i = 0; i < d; ++i) {
      if (s & (std::uint64_t{1} << i)) phi(i) += D / popcount(s);
    }
  }
  return phi;
}

inline std::vector<double> random_game(std::mt19937_64& rng, Index d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(std::size_t{1} << d);
  for (auto& x : v) x = u(rng);
  return v;
}

// f(x) = x_0 * x_1 as a one-output regressor.
class Product final : public ava::Predictor {
 public:
  ava::ModelKind kind() const override { return ava::ModelKind::linear; }
  ava::Capabilities capabilities() const override { return {true, false, false}; }
  Index input_dim() const override { return 2; }
  Index output_dim() const override { return 1; }
  bool is_classifier() const override { return false; }
  nlohmann::json to_json() const override { return {}; }

 protected:
  Vector do_predict(const Vector& x) const override { return Vector::Constant(1, x(0) * x(1)); }
  Vector do_grad_input(const Vector& x, Index) const override {
    return (Vector(2) << x(1), x(0)).finished();
  }
};

inline std::unique_ptr<ava::LinearModel> linear_score(const Vector& w) {
  ava::LinearConfig cfg;
  cfg.link = ava::LinearLink::identity;
  cfg.intercept = false;
  return std::make_unique<ava::LinearModel>(cfg, w.size(), w);
}

inline std::unique_ptr<ava::Mlp> random_mlp(Index d, Index classes, std::uint64_t seed,
                                            ava::Activation act = ava::Activation::sigmoid,
                                            double scale = 2.0) {
  const std::vector<Index> sizes{d, 8, 8, classes};
  return std::make_unique<ava::Mlp>(sizes, act, ava::LossKind::cross_entropy, 0.0,
                                    scale * ava::init_mlp_parameters(sizes, seed));
}

}  // namespace test
