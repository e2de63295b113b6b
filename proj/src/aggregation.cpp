#include "ava/aggregation.hpp"

#include <algorithm>
#include <cmath>

namespace ava {

namespace {

// Keeps test-point sampling streams apart from training-point streams.
constexpr std::uint64_t kTestStream = 0x7e57000000000000ULL;

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

const Predictor* find_gradient_model(const Predictor& model) {
  if (model.capabilities().input_gradient) return &model;
  const Predictor* s = model.surrogate();
  if (s != nullptr && s->capabilities().input_gradient) return s;
  return nullptr;
}

}  // namespace

std::string_view to_string(ConsensusMethod m) {
  return m == ConsensusMethod::ava_shap ? "ava_shap" : "ava_ig";
}

std::string_view to_string(IgBaseline b) {
  switch (b) {
    case IgBaseline::neighborhood_mean:
      return "neighborhood_mean";
    case IgBaseline::zero:
      return "zero";
    case IgBaseline::training_mean:
      return "training_mean";
    case IgBaseline::fixed:
      return "fixed";
  }
  return "neighborhood_mean";
}

IgBaseline ig_baseline_from_string(std::string_view name) {
  if (name == "neighborhood_mean") return IgBaseline::neighborhood_mean;
  if (name == "zero") return IgBaseline::zero;
  if (name == "training_mean") return IgBaseline::training_mean;
  if (name == "fixed") return IgBaseline::fixed;
  throw ConfigError("unknown IG baseline '" + std::string(name) +
                    "' (valid: neighborhood_mean, zero, training_mean, fixed)");
}

void AvaConfig::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (shap_exact_cap < 0 || shap_exact_cap > kShapleyExactCap) {
    throw ConfigError("shap_exact_cap must lie in [0, " + std::to_string(kShapleyExactCap) + "]");
  }
  if (shap_samples < 1) throw ConfigError("shap_samples must be >= 1");
  if (ig_steps < 1) throw ConfigError("ig_steps must be >= 1");
  if (ig_baseline == IgBaseline::fixed && fixed_baseline.size() == 0) {
    throw ConfigError("fixed IG baseline requested but no baseline vector given");
  }
  if (target_class && *target_class < 0) throw ConfigError("target_class must be >= 0");
}

nlohmann::json AvaConfig::to_json() const {
  nlohmann::json j{{"k", k},
                   {"weight_mode", to_string(weight_mode)},
                   {"zero_weight_policy", zero_policy == ZeroWeightPolicy::uniform ? "uniform" : "error"},
                   {"solver",
                    {{"method", to_string(solver.method)},
                     {"damping", solver.damping},
                     {"tol", solver.tol},
                     {"max_iter", solver.max_iter},
                     {"exact_cap", solver.exact_cap}}},
                   {"shap_exact_cap", shap_exact_cap},
                   {"shap_samples", shap_samples},
                   {"ig_steps", ig_steps},
                   {"ig_baseline", to_string(ig_baseline)},
                   {"include_test_point", include_test_point},
                   {"seed", seed}};
  if (ig_baseline == IgBaseline::fixed) j["fixed_baseline"] = as_std(fixed_baseline);
  j["target_class"] = target_class ? nlohmann::json(*target_class) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json ConsensusAttribution::to_json() const {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < per_point.size(); ++i) {
    auto a = per_point[i].to_json();
    a["normalized_weight"] = normalized_weights(static_cast<Index>(i));
    points.push_back(std::move(a));
  }
  nlohmann::json j{{"method", to_string(method)},
                   {"test_point_id", test_point_id},
                   {"output", output},
                   {"values", as_std(values)},
                   {"neighborhood",
                    {{"indices", neighborhood.indices},
                     {"weights", as_std(neighborhood.weights)},
                     {"normalizer", neighborhood.normalizer},
                     {"uniform_fallback", neighborhood.uniform_fallback}}},
                   {"normalized_weights", as_std(normalized_weights)},
                   {"per_point", std::move(points)},
                   {"config", config}};
  if (method == ConsensusMethod::ava_ig) j["baseline"] = as_std(baseline);
  return j;
}

Vector aggregate_weighted(const std::vector<Vector>& attributions, const Vector& weights) {
  if (attributions.empty()) throw ConfigError("aggregation needs at least one attribution");
  if (static_cast<Index>(attributions.size()) != weights.size()) {
    throw DataError("aggregation: " + std::to_string(attributions.size()) + " attributions but " +
                    std::to_string(weights.size()) + " weights");
  }
  const Index d = attributions.front().size();
  for (const auto& g : attributions) {
    if (g.size() != d) throw DataError("aggregation: attribution vectors differ in length");
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw DataError("aggregation weights must be finite and non-negative");
  }
  double rho = 0.0;
  for (Index j = 0; j < weights.size(); ++j) rho += weights(j);
  if (!(rho > 0.0)) throw ZeroInfluenceError("aggregation weights sum to zero");

  Vector out = Vector::Zero(d);
  for (std::size_t j = 0; j < attributions.size(); ++j) {
    out += (weights(static_cast<Index>(j)) / rho) * attributions[j];
  }

  // Rounding can push a coordinate just past the hull; anything further is a bug.
  for (Index i = 0; i < d; ++i) {
    double lo = attributions.front()(i);
    double hi = lo;
    for (const auto& g : attributions) {
      lo = std::min(lo, g(i));
      hi = std::max(hi, g(i));
    }
    const double slack = 1e-9 * std::max({std::abs(lo), std::abs(hi), 1e-300});
    if (out(i) < lo - slack || out(i) > hi + slack) {
      throw Error("aggregation left the convex hull at feature " + std::to_string(i));
    }
    out(i) = std::clamp(out(i), lo, hi);
  }
  return out;
}

Explainer::Explainer(const Predictor& model, const Dataset& train, AvaConfig config)
    : model_(model),
      train_(train),
      config_(std::move(config)),
      background_(train.feature_mean()),
      gradient_model_(find_gradient_model(model)) {
  config_.validate();
  if (train_.dim() != model_.input_dim()) {
    throw DataError("training data dimension does not match the model");
  }
  if (config_.ig_baseline == IgBaseline::fixed && config_.fixed_baseline.size() != train_.dim()) {
    throw DataError("fixed IG baseline has the wrong dimension");
  }
  try {
    engine_.emplace(model_, train_, config_.solver);
  } catch (const CapabilityError& e) {
    engine_error_ = e.what();
  }
}

const InfluenceEngine& Explainer::engine() const {
  if (!engine_) throw CapabilityError(engine_error_);
  return *engine_;
}

Index Explainer::target_output(const Vector& x_test) const {
  if (config_.target_class) {
    if (*config_.target_class >= model_.output_dim()) {
      throw ConfigError("target_class exceeds the model's output count");
    }
    return *config_.target_class;
  }
  return model_.predicted_class(x_test);
}

InfluenceWeights Explainer::influence_weights(const Vector& x_test, double y_test,
                                              Index test_point_id) const {
  return make_influence_weights(engine().influences(x_test, y_test), config_.weight_mode,
                                test_point_id);
}

Neighborhood Explainer::neighborhood(const InfluenceWeights& weights, Index k) const {
  return select_neighborhood(weights, k, config_.zero_policy);
}

Attribution Explainer::shapley_at(const Vector& x, Index output, Index id,
                                  std::uint64_t stream) const {
  Attribution a = x.size() <= config_.shap_exact_cap
                      ? shapley_exact(model_, x, background_, output)
                      : shapley_sampled(model_, x, background_, output, config_.shap_samples,
                                        derive_seed(config_.seed ^ stream, id));
  a.point_id = id;
  return a;
}

Attribution Explainer::ig_at(const Vector& x, const Vector& baseline, Index output,
                             Index id) const {
  if (gradient_model_ == nullptr) {
    throw CapabilityError(std::string(to_string(model_.kind())) +
                          " predictor has no input gradient and no differentiable surrogate");
  }
  Attribution a = integrated_gradients(*gradient_model_, x, baseline, output, config_.ig_steps);
  a.point_id = id;
  return a;
}

const Attribution& Explainer::cached_shapley(Index j, Index output) const {
  {
    std::lock_guard lock(cache_mutex_);
    const auto it = shap_cache_.find({j, output});
    if (it != shap_cache_.end()) return it->second;
  }
  Attribution a = shapley_at(train_.point(j), output, j, 0);
  std::lock_guard lock(cache_mutex_);
  return shap_cache_.emplace(std::pair{j, output}, std::move(a)).first->second;
}

ConsensusAttribution Explainer::consensus(ConsensusMethod method, const Vector& x_test,
                                          const Neighborhood& nb, Index output,
                                          Index test_point_id) const {
  if (nb.size() < 1) throw ConfigError("empty neighborhood");
  ConsensusAttribution c;
  c.method = method;
  c.test_point_id = test_point_id;
  c.output = output;
  c.neighborhood = nb;
  c.config = config_.to_json();

  std::vector<Index> ids = nb.indices;
  Vector weights = nb.weights;
  if (config_.include_test_point) {
    ids.push_back(-1);
    weights.conservativeResize(weights.size() + 1);
    weights(weights.size() - 1) = nb.normalizer / static_cast<double>(nb.size());
  }
  auto point = [&](Index id) -> Vector {
    return id < 0 ? x_test : Vector(train_.point(id));
  };

  if (method == ConsensusMethod::ava_shap) {
    for (Index id : ids) {
      c.per_point.push_back(id < 0 ? shapley_at(x_test, output, test_point_id, kTestStream)
                                   : cached_shapley(id, output));
    }
  } else {
    switch (config_.ig_baseline) {
      case IgBaseline::neighborhood_mean: {
        c.baseline = Vector::Zero(train_.dim());
        for (Index i = 0; i < nb.size(); ++i) {
          c.baseline += (nb.weights(i) / nb.normalizer) * train_.point(nb.indices[i]);
        }
        break;
      }
      case IgBaseline::zero:
        c.baseline = Vector::Zero(train_.dim());
        break;
      case IgBaseline::training_mean:
        c.baseline = background_;
        break;
      case IgBaseline::fixed:
        c.baseline = config_.fixed_baseline;
        break;
    }
    for (Index id : ids) {
      c.per_point.push_back(ig_at(point(id), c.baseline, output, id < 0 ? test_point_id : id));
    }
  }

  std::vector<Vector> g;
  g.reserve(c.per_point.size());
  for (const auto& a : c.per_point) g.push_back(a.values);
  c.values = aggregate_weighted(g, weights);
  double rho = 0.0;
  for (Index j = 0; j < weights.size(); ++j) rho += weights(j);
  c.normalized_weights = weights / rho;
  return c;
}

ConsensusAttribution Explainer::ava_shap(const Vector& x_test, double y_test,
                                         Index test_point_id) const {
  const auto w = influence_weights(x_test, y_test, test_point_id);
  return consensus(ConsensusMethod::ava_shap, x_test, neighborhood(w, config_.k),
                   target_output(x_test), test_point_id);
}

ConsensusAttribution Explainer::ava_ig(const Vector& x_test, double y_test,
                                       Index test_point_id) const {
  const auto w = influence_weights(x_test, y_test, test_point_id);
  return consensus(ConsensusMethod::ava_ig, x_test, neighborhood(w, config_.k),
                   target_output(x_test), test_point_id);
}

Attribution Explainer::shap(const Vector& x_test, Index output, Index test_point_id) const {
  return shapley_at(x_test, output, test_point_id, kTestStream);
}

Attribution Explainer::ig(const Vector& x_test, Index output, Index test_point_id) const {
  return ig_at(x_test, Vector::Zero(x_test.size()), output, test_point_id);
}

ConsensusAttribution ava_shap(const Predictor& model, const Vector& x_test, double y_test,
                              const Dataset& train, const AvaConfig& config) {
  return Explainer(model, train, config).ava_shap(x_test, y_test);
}

ConsensusAttribution ava_ig(const Predictor& model, const Vector& x_test, double y_test,
                            const Dataset& train, const AvaConfig& config) {
  return Explainer(model, train, config).ava_ig(x_test, y_test);
}

}  // namespace ava
