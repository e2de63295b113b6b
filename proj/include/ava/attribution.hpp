#pragma once

#include "ava/predictor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ava {

enum class AttributionMethod { shap_exact, shap_sampled, ig };

std::string_view to_string(AttributionMethod m);

struct Attribution {
  Vector values;
  AttributionMethod method = AttributionMethod::shap_exact;
  Index point_id = -1;
  Index output = 0;
  Vector reference;  // SHAP background or IG baseline
  int steps = 0;  // IG quadrature points
  Index samples = 0;  // sampled SHAP permutations
  std::uint64_t seed = 0;
  double completeness_residual = 0.0;  // IG only
  Vector standard_errors;  // sampled SHAP only

  nlohmann::json to_json() const;
};

// Largest feature count for which the full powerset is enumerated.
inline constexpr Index kShapleyExactCap = 20;

// v(S) = f(z_S) where z takes x on the features in S and the background
// elsewhere. Feature i is in S when bit i of the mask is set.
class CoalitionValue {
 public:
  CoalitionValue(const Predictor& model, Vector x, Vector background, Index output);

  double operator()(std::uint64_t mask) const;
  Index dim() const { return x_.size(); }
  // All 2^d values indexed by mask.
  std::vector<double> table() const;

 private:
  const Predictor& model_;
  Vector x_;
  Vector background_;
  Index output_;
};

// Shapley values of the game given by a full value table (size 2^d).
Vector shapley_from_table(std::span<const double> values, Index d);

// Moebius transform of the game at `subset`:
//   D(S) = sum_{T subset of S} (-1)^{|S \ T|} v(T).
double harsanyi_dividend(std::span<const double> values, std::uint64_t subset);
double harsanyi_dividend(const CoalitionValue& v, std::uint64_t subset);

Attribution shapley_exact(const Predictor& model, const Vector& x, const Vector& background,
                          Index output);

// Permutation-sampling estimate; deterministic for a given seed.
Attribution shapley_sampled(const Predictor& model, const Vector& x, const Vector& background,
                            Index output, Index n_samples, std::uint64_t seed);

// Midpoint-rule Integrated Gradients with alpha_t = (t - 1/2) / steps.
Attribution integrated_gradients(const Predictor& model, const Vector& x, const Vector& baseline,
                                 Index output, int steps);

// Independent stream seed for (seed, point_id).
std::uint64_t derive_seed(std::uint64_t seed, Index point_id);

}  // namespace ava
