#include "ava/linear.hpp"

#include <cmath>

namespace ava {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

LinearModel::LinearModel(LinearConfig config, Index dim, Vector theta)
    : config_(config), dim_(dim), theta_(std::move(theta)) {
  if (theta_.size() != dim_ + (config_.intercept ? 1 : 0)) {
    throw ConfigError("linear model: parameter length does not match dimension");
  }
}

Vector LinearModel::augmented(const Vector& x) const {
  if (!config_.intercept) return x;
  Vector a(dim_ + 1);
  a.head(dim_) = x;
  a(dim_) = 1.0;
  return a;
}

double LinearModel::score(const Vector& x) const {
  double s = theta_.head(dim_).dot(x);
  if (config_.intercept) s += theta_(dim_);
  return s;
}

Vector LinearModel::do_predict(const Vector& x) const {
  const double s = score(x);
  if (config_.link == LinearLink::identity) return Vector::Constant(1, s);
  const double p = sigmoid(s);
  Vector out(2);
  out << 1.0 - p, p;
  return out;
}

Vector LinearModel::do_grad_input(const Vector& x, Index output) const {
  const Vector w = theta_.head(dim_);
  if (config_.link == LinearLink::identity) return w;
  const double p = sigmoid(score(x));
  const double dp = p * (1.0 - p);
  return output == 1 ? Vector(dp * w) : Vector(-dp * w);
}

double LinearModel::do_loss(const Vector& x, double y) const {
  const double s = score(x);
  if (config_.link == LinearLink::identity) return (s - y) * (s - y);
  // -y log p - (1-y) log(1-p) with p = sigmoid(s)
  return softplus(s) - y * s;
}

Vector LinearModel::do_grad_params(const Vector& x, double y) const {
  const double s = score(x);
  const double r = config_.link == LinearLink::identity ? 2.0 * (s - y) : sigmoid(s) - y;
  return r * augmented(x);
}

Vector LinearModel::do_hvp(const Dataset& data, const Vector& v) const {
  Vector out = Vector::Zero(theta_.size());
  for (Index j = 0; j < data.size(); ++j) {
    const Vector a = augmented(data.features.col(j));
    double c = 2.0;
    if (config_.link == LinearLink::logistic) {
      const double p = sigmoid(score(data.features.col(j)));
      c = p * (1.0 - p);
    }
    out += (c * a.dot(v)) * a;
  }
  out /= static_cast<double>(data.size());
  out += config_.l2 * v;
  return out;
}

double LinearModel::objective(const Dataset& data) const {
  double total = 0.0;
  for (Index j = 0; j < data.size(); ++j) total += do_loss(data.features.col(j), data.labels(j));
  return total / static_cast<double>(data.size()) + 0.5 * config_.l2 * theta_.squaredNorm();
}

Vector LinearModel::objective_gradient(const Dataset& data) const {
  Vector g = Vector::Zero(theta_.size());
  for (Index j = 0; j < data.size(); ++j) g += do_grad_params(data.features.col(j), data.labels(j));
  g /= static_cast<double>(data.size());
  g += config_.l2 * theta_;
  return g;
}

nlohmann::json LinearModel::to_json() const {
  return {{"kind", "linear"},
          {"link", config_.link == LinearLink::logistic ? "logistic" : "identity"},
          {"intercept", config_.intercept},
          {"l2", config_.l2},
          {"dim", dim_},
          {"theta", std::vector<double>(theta_.data(), theta_.data() + theta_.size())}};
}

std::unique_ptr<LinearModel> LinearModel::from_json(const nlohmann::json& j) {
  LinearConfig c;
  c.link = j.at("link") == "logistic" ? LinearLink::logistic : LinearLink::identity;
  c.intercept = j.at("intercept").get<bool>();
  c.l2 = j.at("l2").get<double>();
  const auto theta = j.at("theta").get<std::vector<double>>();
  return std::make_unique<LinearModel>(
      c, j.at("dim").get<Index>(),
      Eigen::Map<const Vector>(theta.data(), static_cast<Index>(theta.size())));
}

std::unique_ptr<LinearModel> train_linear(const Dataset& train, const LinearConfig& config) {
  if (train.size() == 0) throw DataError("cannot train on an empty dataset");
  if (config.l2 < 0) throw ConfigError("l2 must be non-negative");
  const Index d = train.dim();
  const Index p = d + (config.intercept ? 1 : 0);
  if (config.link == LinearLink::logistic) {
    for (Index j = 0; j < train.size(); ++j) {
      if (train.labels(j) != 0.0 && train.labels(j) != 1.0) {
        throw DataError("logistic link needs binary 0/1 labels");
      }
    }
  }
  auto model = std::make_unique<LinearModel>(config, d, Vector::Zero(p));

  // Newton iterations on the explicit Hessian; the identity link converges in
  // one step.
  for (int iter = 0; iter < config.max_iter; ++iter) {
    const Vector g = model->objective_gradient(train);
    if (g.norm() <= config.tol) return model;
    Matrix h(p, p);
    for (Index c = 0; c < p; ++c) h.col(c) = model->do_hvp(train, Vector::Unit(p, c));
    const Vector step = h.ldlt().solve(g);
    if (!step.allFinite()) throw ConvergenceError("linear model: singular Hessian");

    const double f0 = model->objective(train);
    double t = 1.0;
    Vector theta = model->theta_;
    for (int ls = 0; ls < 50; ++ls) {
      model->theta_ = theta - t * step;
      if (model->objective(train) <= f0 + 1e-15 * std::abs(f0)) break;
      t *= 0.5;
    }
    if (config.link == LinearLink::identity && iter >= 1) return model;
  }
  const double gnorm = model->objective_gradient(train).norm();
  if (gnorm > 1e-8) {
    throw ConvergenceError("linear model: Newton did not converge, gradient norm " +
                           std::to_string(gnorm));
  }
  return model;
}

}  // namespace ava
