#include "ava/attribution.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <random>

namespace ava {

namespace {

void check_dims(const Predictor& model, const Vector& x, const Vector& reference, Index output) {
  if (x.size() != model.input_dim() || reference.size() != model.input_dim()) {
    throw DataError("attribution: point and reference must have the model's input dimension");
  }
  if (output < 0 || output >= model.output_dim()) throw ConfigError("output index out of range");
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> as_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string_view to_string(AttributionMethod m) {
  switch (m) {
    case AttributionMethod::shap_exact:
      return "shap_exact";
    case AttributionMethod::shap_sampled:
      return "shap_sampled";
    case AttributionMethod::ig:
      return "ig";
  }
  return "unknown";
}

nlohmann::json Attribution::to_json() const {
  nlohmann::json j{{"method", to_string(method)},
                   {"point_id", point_id},
                   {"output", output},
                   {"values", as_std(values)},
                   {"reference", as_std(reference)}};
  if (method == AttributionMethod::ig) {
    j["steps"] = steps;
    j["completeness_residual"] = completeness_residual;
  }
  if (method == AttributionMethod::shap_sampled) {
    j["samples"] = samples;
    j["seed"] = seed;
    j["standard_errors"] = as_std(standard_errors);
  }
  return j;
}

std::uint64_t derive_seed(std::uint64_t seed, Index point_id) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(point_id) + 0x632be59bd9b4e019ULL));
}

CoalitionValue::CoalitionValue(const Predictor& model, Vector x, Vector background, Index output)
    : model_(model), x_(std::move(x)), background_(std::move(background)), output_(output) {
  check_dims(model_, x_, background_, output_);
  if (x_.size() > 63) throw ConfigError("coalition masks support at most 63 features");
}

double CoalitionValue::operator()(std::uint64_t mask) const {
  Vector z = background_;
  for (Index i = 0; i < x_.size(); ++i) {
    if ((mask >> i) & 1U) z(i) = x_(i);
  }
  return model_.predict(z)(output_);
}

std::vector<double> CoalitionValue::table() const {
  if (dim() > kShapleyExactCap) {
    throw ConfigError("powerset of " + std::to_string(dim()) + " features exceeds the cap of " +
                      std::to_string(kShapleyExactCap) + "; use sampled Shapley values");
  }
  const std::uint64_t n = std::uint64_t{1} << dim();
  std::vector<double> v(n);
  for (std::uint64_t mask = 0; mask < n; ++mask) v[mask] = (*this)(mask);
  return v;
}

Vector shapley_from_table(std::span<const double> values, Index d) {
  if (values.size() != (std::size_t{1} << d)) throw DataError("value table must have 2^d entries");
  // weight(s) = s! (d - s - 1)! / d! = 1 / (d * C(d - 1, s))
  std::vector<double> weight(d);
  double binom = 1.0;
  for (Index s = 0; s < d; ++s) {
    weight[s] = 1.0 / (static_cast<double>(d) * binom);
    binom = binom * static_cast<double>(d - 1 - s) / static_cast<double>(s + 1);
  }
  Vector phi = Vector::Zero(d);
  for (std::uint64_t mask = 0; mask < values.size(); ++mask) {
    const double w = weight[std::popcount(mask) < d ? std::popcount(mask) : 0];
    for (Index i = 0; i < d; ++i) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      if (mask & bit) continue;
      phi(i) += w * (values[mask | bit] - values[mask]);
    }
  }
  return phi;
}

double harsanyi_dividend(std::span<const double> values, std::uint64_t subset) {
  if (subset >= values.size()) throw ConfigError("subset outside the value table");
  // Enumerate the submasks of `subset`.
  const int size = std::popcount(subset);
  double total = 0.0;
  std::uint64_t t = subset;
  while (true) {
    const int missing = size - std::popcount(t);
    total += (missing % 2 == 0 ? 1.0 : -1.0) * values[t];
    if (t == 0) break;
    t = (t - 1) & subset;
  }
  return total;
}

double harsanyi_dividend(const CoalitionValue& v, std::uint64_t subset) {
  const int size = std::popcount(subset);
  if (size > kShapleyExactCap) throw ConfigError("dividend subset exceeds the powerset cap");
  double total = 0.0;
  std::uint64_t t = subset;
  while (true) {
    const int missing = size - std::popcount(t);
    total += (missing % 2 == 0 ? 1.0 : -1.0) * v(t);
    if (t == 0) break;
    t = (t - 1) & subset;
  }
  return total;
}

Attribution shapley_exact(const Predictor& model, const Vector& x, const Vector& background,
                          Index output) {
  const CoalitionValue v(model, x, background, output);
  const auto table = v.table();
  Attribution a;
  a.values = shapley_from_table(table, x.size());
  a.method = AttributionMethod::shap_exact;
  a.output = output;
  a.reference = background;
  return a;
}

Attribution shapley_sampled(const Predictor& model, const Vector& x, const Vector& background,
                            Index output, Index n_samples, std::uint64_t seed) {
  check_dims(model, x, background, output);
  if (n_samples < 1) throw ConfigError("n_samples must be >= 1");
  const Index d = x.size();
  std::mt19937_64 rng(seed);
  std::vector<Index> order(d);
  std::iota(order.begin(), order.end(), Index{0});

  const double base = model.predict(background)(output);
  // Welford running mean and squared deviations per feature.
  Vector mean = Vector::Zero(d);
  Vector m2 = Vector::Zero(d);
  Vector z(d);
  for (Index s = 0; s < n_samples; ++s) {
    std::shuffle(order.begin(), order.end(), rng);
    z = background;
    double prev = base;
    const double count = static_cast<double>(s + 1);
    for (Index i : order) {
      z(i) = x(i);
      const double cur = model.predict(z)(output);
      const double delta = cur - prev;
      const double dev = delta - mean(i);
      mean(i) += dev / count;
      m2(i) += dev * (delta - mean(i));
      prev = cur;
    }
  }
  const double n = static_cast<double>(n_samples);
  Attribution a;
  a.values = mean;
  a.standard_errors = Vector::Zero(d);
  if (n_samples > 1) a.standard_errors = (m2 / ((n - 1.0) * n)).cwiseSqrt();
  a.method = AttributionMethod::shap_sampled;
  a.output = output;
  a.reference = background;
  a.samples = n_samples;
  a.seed = seed;
  return a;
}

Attribution integrated_gradients(const Predictor& model, const Vector& x, const Vector& baseline,
                                 Index output, int steps) {
  check_dims(model, x, baseline, output);
  if (steps < 1) throw ConfigError("IG steps must be >= 1");
  if (!model.capabilities().input_gradient) {
    throw CapabilityError(std::string(to_string(model.kind())) +
                          " predictor has no input gradient for Integrated Gradients");
  }
  const Vector diff = x - baseline;
  Vector avg = Vector::Zero(x.size());
  for (int t = 1; t <= steps; ++t) {
    const double alpha = (static_cast<double>(t) - 0.5) / static_cast<double>(steps);
    avg += model.grad_input(baseline + alpha * diff, output);
  }
  avg /= static_cast<double>(steps);

  Attribution a;
  a.values = diff.cwiseProduct(avg);
  a.method = AttributionMethod::ig;
  a.output = output;
  a.reference = baseline;
  a.steps = steps;
  const double gap = model.predict(x)(output) - model.predict(baseline)(output);
  a.completeness_residual = std::abs(a.values.sum() - gap);
  return a;
}

}  // namespace ava
