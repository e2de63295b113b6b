#include "ava/svm.hpp"

#include <cmath>

namespace ava {

namespace {

Matrix rbf_gram(const Matrix& points, double gamma) {
  const Index n = points.cols();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = std::exp(-gamma * (points.col(i) - points.col(j)).squaredNorm());
    }
  }
  return k;
}

double sign_target(double label, Index cls) { return static_cast<Index>(label) == cls ? 1.0 : -1.0; }

}  // namespace

RbfSvm::RbfSvm(SvmConfig config, Matrix support, Index num_classes, Vector theta)
    : config_(config),
      support_(std::move(support)),
      classes_(num_classes),
      theta_(std::move(theta)) {
  if (!(config_.c > 0)) throw ConfigError("SVM C must be > 0");
  if (!(config_.gamma > 0)) throw ConfigError("SVM gamma must be > 0");
  if (theta_.size() != classes_ * block()) throw ConfigError("SVM parameter length mismatch");
  gram_ = rbf_gram(support_, config_.gamma);
}

Vector RbfSvm::kernel_row(const Vector& x) const {
  return (-config_.gamma * (support_.colwise() - x).colwise().squaredNorm()).array().exp();
}

Vector RbfSvm::decision_function(const Vector& x) const {
  const Vector k = kernel_row(x);
  const Index n = support_.cols();
  Vector f(classes_);
  for (Index c = 0; c < classes_; ++c) {
    f(c) = theta_.segment(c * block(), n).dot(k) + theta_(c * block() + n);
  }
  return f;
}

Vector RbfSvm::do_predict(const Vector& x) const { return softmax(decision_function(x)); }

Vector RbfSvm::do_grad_input(const Vector& x, Index output) const {
  const Vector k = kernel_row(x);
  const Index n = support_.cols();
  const Vector p = softmax(decision_function(x));
  // d K(x_i, x) / dx = -2 gamma (x - x_i) K(x_i, x)
  const Matrix diff = (-support_).colwise() + x;  // columns x - x_i
  Vector grad = Vector::Zero(x.size());
  for (Index c = 0; c < classes_; ++c) {
    const double coef = p(output) * ((c == output ? 1.0 : 0.0) - p(c));
    if (coef == 0.0) continue;
    const Vector w = theta_.segment(c * block(), n).cwiseProduct(k);
    grad += coef * (-2.0 * config_.gamma) * (diff * w);
  }
  return grad;
}

double RbfSvm::do_loss(const Vector& x, double y) const {
  const Vector f = decision_function(x);
  double total = 0.0;
  for (Index c = 0; c < classes_; ++c) {
    const double h = std::max(0.0, 1.0 - sign_target(y, c) * f(c));
    total += h * h;
  }
  return total;
}

Vector RbfSvm::do_grad_params(const Vector& x, double y) const {
  const Vector k = kernel_row(x);
  const Index n = support_.cols();
  const Vector f = decision_function(x);
  Vector g = Vector::Zero(theta_.size());
  for (Index c = 0; c < classes_; ++c) {
    const double yc = sign_target(y, c);
    const double h = std::max(0.0, 1.0 - yc * f(c));
    if (h == 0.0) continue;
    g.segment(c * block(), n) = -2.0 * h * yc * k;
    g(c * block() + n) = -2.0 * h * yc;
  }
  return g;
}

Vector RbfSvm::do_hvp(const Dataset& data, const Vector& v) const {
  const Index n = support_.cols();
  const double lambda = 1.0 / (config_.c * static_cast<double>(n));
  Vector out = Vector::Zero(theta_.size());
  for (Index j = 0; j < data.size(); ++j) {
    const Vector k = kernel_row(data.features.col(j));
    const Vector f = decision_function(data.features.col(j));
    for (Index c = 0; c < classes_; ++c) {
      if (1.0 - sign_target(data.labels(j), c) * f(c) <= 0.0) continue;
      const double kv = k.dot(v.segment(c * block(), n)) + v(c * block() + n);
      out.segment(c * block(), n) += 2.0 * kv * k;
      out(c * block() + n) += 2.0 * kv;
    }
  }
  out /= static_cast<double>(data.size());
  for (Index c = 0; c < classes_; ++c) {
    out.segment(c * block(), n) += lambda * (gram_ * v.segment(c * block(), n));
  }
  return out;
}

nlohmann::json RbfSvm::to_json() const {
  std::vector<double> sup(support_.data(), support_.data() + support_.size());
  return {{"kind", "svm_rbf"},
          {"c", config_.c},
          {"gamma", config_.gamma},
          {"dim", support_.rows()},
          {"num_support", support_.cols()},
          {"num_classes", classes_},
          {"support", sup},
          {"theta", std::vector<double>(theta_.data(), theta_.data() + theta_.size())}};
}

std::unique_ptr<RbfSvm> RbfSvm::from_json(const nlohmann::json& j) {
  SvmConfig c;
  c.c = j.at("c").get<double>();
  c.gamma = j.at("gamma").get<double>();
  const auto sup = j.at("support").get<std::vector<double>>();
  const auto theta = j.at("theta").get<std::vector<double>>();
  Matrix support = Eigen::Map<const Matrix>(sup.data(), j.at("dim").get<Index>(),
                                            j.at("num_support").get<Index>());
  return std::make_unique<RbfSvm>(
      c, std::move(support), j.at("num_classes").get<Index>(),
      Eigen::Map<const Vector>(theta.data(), static_cast<Index>(theta.size())));
}

std::unique_ptr<RbfSvm> train_svm_rbf(const Dataset& train, const SvmConfig& config) {
  if (!(config.c > 0)) throw ConfigError("SVM C must be > 0");
  if (!(config.gamma > 0)) throw ConfigError("SVM gamma must be > 0");
  const Index n = train.size();
  if (n == 0) throw DataError("cannot train on an empty dataset");
  const Index classes = std::max<Index>(train.class_count(), 2);
  const Matrix k = rbf_gram(train.features, config.gamma);
  const double lambda = 1.0 / (config.c * static_cast<double>(n));
  const double inv_n = 1.0 / static_cast<double>(n);

  Vector theta = Vector::Zero(classes * (n + 1));
  for (Index c = 0; c < classes; ++c) {
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = sign_target(train.labels(i), c);

    Vector alpha = Vector::Zero(n);
    double b = 0.0;
    auto objective = [&](const Vector& a, double bias) {
      const Vector ka = k * a;
      const Vector h = (1.0 - y.array() * (ka.array() + bias)).max(0.0);
      return inv_n * h.squaredNorm() + 0.5 * lambda * a.dot(ka);
    };

    bool converged = false;
    for (int iter = 0; iter < config.max_iter; ++iter) {
      const Vector ka = k * alpha;
      const Vector f = ka.array() + b;
      std::vector<Index> active;
      for (Index i = 0; i < n; ++i) {
        if (1.0 - y(i) * f(i) > 0.0) active.push_back(i);
      }
      Vector grad(n + 1);
      grad.head(n) = lambda * ka;
      grad(n) = 0.0;
      Matrix hess = Matrix::Zero(n + 1, n + 1);
      hess.topLeftCorner(n, n) = lambda * k;
      for (Index i : active) {
        const double r = 2.0 * inv_n * (f(i) - y(i));
        grad.head(n) += r * k.col(i);
        grad(n) += r;
        Vector row(n + 1);
        row.head(n) = k.col(i);
        row(n) = 1.0;
        hess.noalias() += 2.0 * inv_n * row * row.transpose();
      }
      if (grad.norm() <= config.tol) {
        converged = true;
        break;
      }
      hess.diagonal().array() += 1e-10;
      const Vector step = hess.ldlt().solve(grad);
      if (!step.allFinite()) throw ConvergenceError("SVM: singular Newton system");

      const double f0 = objective(alpha, b);
      double t = 1.0;
      Vector next_alpha = alpha;
      double next_b = b;
      for (int ls = 0; ls < 60; ++ls) {
        next_alpha = alpha - t * step.head(n);
        next_b = b - t * step(n);
        if (objective(next_alpha, next_b) <= f0) break;
        t *= 0.5;
      }
      const double moved = t * step.norm();
      alpha = next_alpha;
      b = next_b;
      if (moved <= 1e-14 * (1.0 + alpha.norm())) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw ConvergenceError("SVM: primal Newton did not converge for class " +
                             std::to_string(c) + " within " + std::to_string(config.max_iter) +
                             " iterations");
    }
    theta.segment(c * (n + 1), n) = alpha;
    theta(c * (n + 1) + n) = b;
  }
  return std::make_unique<RbfSvm>(config, train.features, classes, std::move(theta));
}

}  // namespace ava
