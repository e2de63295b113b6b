#include "ava/influence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ava {

namespace {

// Left-to-right accumulation so that cached and uncached paths agree bitwise.
double dot_sequential(const double* a, const double* b, Index n) {
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void require_influence_capabilities(const Predictor& model) {
  const auto caps = model.capabilities();
  if (!caps.param_gradient || !caps.hvp) {
    throw CapabilityError(std::string(to_string(model.kind())) +
                          " predictor lacks parameter gradients or Hessian-vector products "
                          "and declares no influence surrogate");
  }
}

const Predictor* find_upweight_model(const Predictor& model) {
  const auto caps = model.capabilities();
  if (caps.param_gradient && caps.hvp) return nullptr;
  if (model.has_upweight_influence()) return &model;
  if (const Predictor* s = model.surrogate(); s != nullptr && s->has_upweight_influence()) return s;
  require_influence_capabilities(model);
  return nullptr;
}

}  // namespace

std::string_view to_string(WeightMode m) {
  switch (m) {
    case WeightMode::abs:
      return "abs";
    case WeightMode::clamp_positive:
      return "clamp_positive";
    case WeightMode::signed_topk:
      return "signed_topk";
  }
  return "abs";
}

WeightMode weight_mode_from_string(std::string_view name) {
  if (name == "abs") return WeightMode::abs;
  if (name == "clamp_positive") return WeightMode::clamp_positive;
  if (name == "signed_topk") return WeightMode::signed_topk;
  throw ConfigError("unknown weight mode '" + std::string(name) +
                    "' (valid: abs, clamp_positive, signed_topk)");
}

std::string_view to_string(SolverMethod m) { return m == SolverMethod::exact ? "exact" : "cg"; }

SolverMethod solver_method_from_string(std::string_view name) {
  if (name == "exact") return SolverMethod::exact;
  if (name == "cg") return SolverMethod::cg;
  throw ConfigError("unknown solver '" + std::string(name) + "' (valid: exact, cg)");
}

SolveResult conjugate_gradient(const LinearOperator& op, const Vector& b, double tol,
                               int max_iter) {
  SolveResult result;
  result.solution = Vector::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) return result;

  Vector r = b;
  Vector p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    const Vector ap = op(p);
    const double curvature = p.dot(ap);
    if (!(curvature > 0.0)) {
      throw ConvergenceError(
          "conjugate gradients hit non-positive curvature; the damped Hessian is not positive "
          "definite (increase damping)");
    }
    const double alpha = rr / curvature;
    result.solution += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    result.iterations = it + 1;
    result.relative_residual = std::sqrt(rr_next) / bnorm;
    if (result.relative_residual <= tol) return result;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  throw ConvergenceError("conjugate gradients did not reach relative residual " +
                         std::to_string(tol) + " within " + std::to_string(max_iter) +
                         " iterations (last " + std::to_string(result.relative_residual) + ")");
}

Matrix explicit_hessian(const Predictor& model, const Dataset& train, double damping) {
  const Index p = model.num_parameters();
  Matrix h(p, p);
  for (Index c = 0; c < p; ++c) h.col(c) = model.hvp(train, Vector::Unit(p, c), damping);
  return h;
}

InverseHvp::InverseHvp(const Predictor& model, const Dataset& train, SolverConfig config)
    : model_(model), train_(train), config_(config) {
  require_influence_capabilities(model_);
  if (config_.damping < 0) throw ConfigError("damping must be non-negative");
  if (!(config_.tol > 0)) throw ConfigError("solver tolerance must be positive");
  const Index p = model_.num_parameters();
  if (config_.max_iter <= 0) config_.max_iter = static_cast<int>(10 * std::max<Index>(p, 1));
  if (config_.method == SolverMethod::exact) {
    if (p > config_.exact_cap) {
      throw ConfigError("exact inverse-HVP needs p <= " + std::to_string(config_.exact_cap) +
                        " (model has " + std::to_string(p) + "); use the cg solver");
    }
    Matrix h = explicit_hessian(model_, train_, config_.damping);
    h = 0.5 * (h + h.transpose()).eval();
    lu_.emplace(h);
    if (!(lu_->rcond() > 1e-14)) {
      throw ConvergenceError("damped Hessian is numerically singular (rcond " +
                             std::to_string(lu_->rcond()) + "); increase damping");
    }
  }
}

SolveResult InverseHvp::solve(const Vector& b) const {
  if (b.size() != model_.num_parameters()) throw DataError("inverse-HVP: length mismatch");
  if (lu_) {
    SolveResult r;
    r.solution = lu_->solve(b);
    const double bnorm = b.norm();
    r.relative_residual =
        bnorm == 0.0 ? 0.0
                     : (model_.hvp(train_, r.solution, config_.damping) - b).norm() / bnorm;
    return r;
  }
  return conjugate_gradient(
      [this](const Vector& v) { return model_.hvp(train_, v, config_.damping); }, b, config_.tol,
      config_.max_iter);
}

Vector inverse_hvp(const Predictor& model, const Dataset& train, const Vector& b,
                   const SolverConfig& config) {
  return InverseHvp(model, train, config).solve(b).solution;
}

double influence_up_loss(const Predictor& model, const Dataset& train, Index j,
                         const Vector& x_test, double y_test, const SolverConfig& config) {
  return InfluenceEngine(model, train, config).influence(j, x_test, y_test);
}

InfluenceEngine::InfluenceEngine(const Predictor& model, const Dataset& train,
                                 SolverConfig config)
    : model_(model), train_(train), config_(config), upweight_model_(find_upweight_model(model)) {
  if (upweight_model_ != nullptr) return;
  solver_.emplace(model_, train_, config_);
  train_grads_.resize(model_.num_parameters(), train_.size());
  for (Index j = 0; j < train_.size(); ++j) {
    train_grads_.col(j) = model_.grad_params(train_.point(j), train_.labels(j));
  }
}

Vector InfluenceEngine::influences(const Vector& x_test, double y_test) const {
  if (upweight_model_ != nullptr) {
    Vector out = upweight_model_->upweight_influence(x_test, y_test);
    if (out.size() != train_.size()) {
      throw DataError("influence surrogate does not cover the training set");
    }
    return out;
  }
  const Vector s_test = solver_->solve(model_.grad_params(x_test, y_test)).solution;
  Vector out(train_.size());
  for (Index j = 0; j < train_.size(); ++j) {
    out(j) = -dot_sequential(s_test.data(), train_grads_.col(j).data(), s_test.size());
  }
  return out;
}

double InfluenceEngine::influence(Index j, const Vector& x_test, double y_test) const {
  if (j < 0 || j >= train_.size()) throw ConfigError("training index out of range");
  if (upweight_model_ != nullptr) return upweight_model_->upweight_influence(x_test, y_test)(j);
  const InverseHvp fresh(model_, train_, config_);
  const Vector s_test = fresh.solve(model_.grad_params(x_test, y_test)).solution;
  const Vector g = model_.grad_params(train_.point(j), train_.labels(j));
  return -dot_sequential(s_test.data(), g.data(), s_test.size());
}

Vector rectify_weights(const Vector& raw, WeightMode mode) {
  if (mode == WeightMode::abs) return raw.cwiseAbs();
  return raw.cwiseMax(0.0);
}

InfluenceWeights make_influence_weights(Vector raw, WeightMode mode, Index test_point_id) {
  if (!raw.allFinite()) throw DataError("influence values must be finite");
  InfluenceWeights w;
  w.rectified = rectify_weights(raw, mode);
  w.raw = std::move(raw);
  w.mode = mode;
  w.test_point_id = test_point_id;
  return w;
}

std::vector<Index> rank_by_influence(const InfluenceWeights& weights) {
  const Vector& key = weights.mode == WeightMode::signed_topk ? weights.raw : weights.rectified;
  std::vector<Index> order(key.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return key(a) > key(b); });
  return order;
}

Neighborhood select_neighborhood(const InfluenceWeights& weights, Index k,
                                 ZeroWeightPolicy policy) {
  return select_neighborhood(weights, rank_by_influence(weights), k, policy);
}

Neighborhood select_neighborhood(const InfluenceWeights& weights, const std::vector<Index>& ranking,
                                 Index k, ZeroWeightPolicy policy) {
  const Index n = weights.rectified.size();
  if (k < 1 || k > n) {
    throw ConfigError("k must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  if (static_cast<Index>(ranking.size()) != n) throw DataError("ranking does not cover every point");
  Neighborhood nb;
  nb.indices.assign(ranking.begin(), ranking.begin() + k);
  nb.weights.resize(k);
  for (Index i = 0; i < k; ++i) nb.weights(i) = weights.rectified(nb.indices[i]);
  nb.normalizer = nb.weights.sum();
  if (!(nb.normalizer > 0.0)) {
    if (policy == ZeroWeightPolicy::error) {
      throw ZeroInfluenceError(
          "all selected influence weights are zero; use uniform weights or a larger k");
    }
    nb.weights.setOnes();
    nb.normalizer = static_cast<double>(k);
    nb.uniform_fallback = true;
  }
  return nb;
}

double loo_influence_oracle(const Trainer& trainer, const Dataset& train, Index j,
                            const Vector& x_test, double y_test) {
  if (j < 0 || j >= train.size()) throw ConfigError("training index out of range");
  const PredictorPtr full = trainer(train);
  std::vector<Index> keep;
  keep.reserve(train.size() - 1);
  for (Index i = 0; i < train.size(); ++i) {
    if (i != j) keep.push_back(i);
  }
  const PredictorPtr reduced = trainer(train.subset(keep));
  const double delta = reduced->loss(x_test, y_test) - full->loss(x_test, y_test);
  if (!std::isfinite(delta)) throw ConvergenceError("leave-one-out retraining diverged");
  return delta;
}

Vector loo_influence_oracle_all(const Trainer& trainer, const Dataset& train,
                                const Vector& x_test, double y_test) {
  const double base = trainer(train)->loss(x_test, y_test);
  Vector out(train.size());
  std::vector<Index> keep(train.size() - 1);
  for (Index j = 0; j < train.size(); ++j) {
    Index pos = 0;
    for (Index i = 0; i < train.size(); ++i) {
      if (i != j) keep[pos++] = i;
    }
    out(j) = trainer(train.subset(keep))->loss(x_test, y_test) - base;
    if (!std::isfinite(out(j))) throw ConvergenceError("leave-one-out retraining diverged");
  }
  return out;
}

}  // namespace ava
