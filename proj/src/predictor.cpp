#include "ava/predictor.hpp"

#include <array>
#include <utility>

namespace ava {

namespace {

constexpr std::array<std::pair<ModelKind, std::string_view>, 6> kKindNames{{
    {ModelKind::linear, "linear"},
    {ModelKind::mlp, "mlp"},
    {ModelKind::svm_rbf, "svm_rbf"},
    {ModelKind::knn, "knn"},
    {ModelKind::soft_knn, "soft_knn"},
    {ModelKind::decision_tree, "decision_tree"},
}};

[[noreturn]] void missing(const Predictor& p, std::string_view what) {
  throw CapabilityError(std::string(to_string(p.kind())) + " predictor has no " +
                        std::string(what));
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  std::string valid;
  for (const auto& [k, n] : kKindNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("unknown model kind '" + std::string(name) + "' (valid: " + valid + ")");
}

Index argmax(const Vector& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

Vector softmax(const Vector& z) {
  const double shift = z.maxCoeff();
  Vector e = (z.array() - shift).exp();
  return e / e.sum();
}

void Predictor::check_point(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw DataError("dimension mismatch: predictor expects " + std::to_string(input_dim()) +
                    " features, got " + std::to_string(x.size()));
  }
  if (!x.allFinite()) throw DataError("input point has non-finite entries");
}

Vector Predictor::predict(const Vector& x) const {
  check_point(x);
  return do_predict(x);
}

Vector Predictor::grad_input(const Vector& x, Index output) const {
  if (!capabilities().input_gradient) missing(*this, "input gradient");
  check_point(x);
  if (output < 0 || output >= output_dim()) throw ConfigError("output index out of range");
  return do_grad_input(x, output);
}

double Predictor::loss(const Vector& x, double y) const {
  check_point(x);
  return do_loss(x, y);
}

Vector Predictor::grad_params(const Vector& x, double y) const {
  if (!capabilities().param_gradient) missing(*this, "parameter gradient");
  check_point(x);
  return do_grad_params(x, y);
}

Vector Predictor::hvp(const Dataset& data, const Vector& v, double damping) const {
  if (!capabilities().hvp) missing(*this, "Hessian-vector product");
  if (v.size() != num_parameters()) {
    throw DataError("hvp: vector length " + std::to_string(v.size()) + " != parameter count " +
                    std::to_string(num_parameters()));
  }
  if (data.dim() != input_dim()) throw DataError("hvp: dataset dimension mismatch");
  Vector out = do_hvp(data, v);
  if (damping != 0.0) out += damping * v;
  return out;
}

const Vector& Predictor::parameters() const {
  static const Vector empty;
  return empty;
}

Index Predictor::predicted_class(const Vector& x) const { return argmax(predict(x)); }

Vector Predictor::upweight_influence(const Vector&, double) const {
  missing(*this, "upweighting influence surrogate");
}

Vector Predictor::do_grad_input(const Vector&, Index) const { missing(*this, "input gradient"); }

double Predictor::do_loss(const Vector&, double) const { missing(*this, "training loss"); }

Vector Predictor::do_grad_params(const Vector&, double) const {
  missing(*this, "parameter gradient");
}

Vector Predictor::do_hvp(const Dataset&, const Vector&) const {
  missing(*this, "Hessian-vector product");
}

}  // namespace ava
