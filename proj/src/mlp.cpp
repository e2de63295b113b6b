#include "ava/mlp.hpp"

#include "dual.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numeric>
#include <random>

namespace ava {

namespace {

using detail::Dual;
using detail::value;

template <class T>
T sigmoid(const T& z) {
  using std::exp;
  if (value(z) >= 0) return T(1.0) / (T(1.0) + exp(-z));
  const T e = exp(z);
  return e / (T(1.0) + e);
}

template <class T>
T activate(Activation a, const T& z) {
  if (a == Activation::sigmoid) return sigmoid(z);
  return value(z) > 0 ? z : T(0.0);
}

// Derivative expressed through the pre-activation; relu'(0) = 0.
template <class T>
T activate_deriv(Activation a, const T& z) {
  if (a == Activation::sigmoid) {
    const T s = sigmoid(z);
    return s * (T(1.0) - s);
  }
  return value(z) > 0 ? T(1.0) : T(0.0);
}

// Views into the flat parameter vector.
struct LayerOffsets {
  std::vector<Index> weight;
  std::vector<Index> bias;
};

LayerOffsets layer_offsets(const std::vector<Index>& sizes) {
  LayerOffsets off;
  Index pos = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    off.weight.push_back(pos);
    pos += sizes[l] * sizes[l + 1];
    off.bias.push_back(pos);
    pos += sizes[l + 1];
  }
  return off;
}

template <class T>
struct Tape {
  std::vector<std::vector<T>> act;  // act[0] = input, act[l] = output of layer l-1
  std::vector<std::vector<T>> pre;  // pre-activations per layer
};

template <class T>
class Network {
 public:
  Network(const std::vector<Index>& sizes, Activation activation, const T* theta)
      : sizes_(sizes), activation_(activation), theta_(theta), off_(layer_offsets(sizes)) {}

  std::vector<T> forward(const Vector& x, Tape<T>& tape) const {
    const std::size_t layers = sizes_.size() - 1;
    tape.act.assign(layers + 1, {});
    tape.pre.assign(layers, {});
    tape.act[0].resize(sizes_[0]);
    for (Index i = 0; i < sizes_[0]; ++i) tape.act[0][i] = T(x(i));
    for (std::size_t l = 0; l < layers; ++l) {
      const Index in = sizes_[l];
      const Index out = sizes_[l + 1];
      const T* w = theta_ + off_.weight[l];
      const T* b = theta_ + off_.bias[l];
      auto& z = tape.pre[l];
      z.resize(out);
      for (Index r = 0; r < out; ++r) {
        T acc = b[r];
        for (Index c = 0; c < in; ++c) acc += w[r * in + c] * tape.act[l][c];
        z[r] = acc;
      }
      if (l + 1 < layers) {
        auto& a = tape.act[l + 1];
        a.resize(out);
        for (Index r = 0; r < out; ++r) a[r] = activate(activation_, z[r]);
      }
    }
    return tape.pre.back();
  }

  // Backpropagate d(objective)/d(logits). Parameter gradients accumulate into
  // dtheta when non-null; the input gradient is written to dx when non-null.
  void backward(const Tape<T>& tape, std::vector<T> delta, T* dtheta, std::vector<T>* dx) const {
    const std::size_t layers = sizes_.size() - 1;
    for (std::size_t l = layers; l-- > 0;) {
      const Index in = sizes_[l];
      const Index out = sizes_[l + 1];
      const T* w = theta_ + off_.weight[l];
      if (dtheta != nullptr) {
        T* dw = dtheta + off_.weight[l];
        T* db = dtheta + off_.bias[l];
        for (Index r = 0; r < out; ++r) {
          for (Index c = 0; c < in; ++c) dw[r * in + c] += delta[r] * tape.act[l][c];
          db[r] += delta[r];
        }
      }
      if (l == 0 && dx == nullptr) break;
      std::vector<T> da(in, T(0.0));
      for (Index r = 0; r < out; ++r) {
        for (Index c = 0; c < in; ++c) da[c] += w[r * in + c] * delta[r];
      }
      if (l == 0) {
        *dx = std::move(da);
        break;
      }
      for (Index c = 0; c < in; ++c) da[c] *= activate_deriv(activation_, tape.pre[l - 1][c]);
      delta = std::move(da);
    }
  }

 private:
  const std::vector<Index>& sizes_;
  Activation activation_;
  const T* theta_;
  LayerOffsets off_;
};

template <class T>
std::vector<T> softmax_t(const std::vector<T>& z) {
  using std::exp;
  double shift = value(z[0]);
  for (const auto& zi : z) shift = std::max(shift, value(zi));
  std::vector<T> p(z.size());
  T sum(0.0);
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = exp(z[k] - T(shift));
    sum += p[k];
  }
  for (auto& pk : p) pk = pk / sum;
  return p;
}

// Loss at the logits and its gradient with respect to them.
template <class T>
T loss_and_seed(LossKind kind, const std::vector<T>& logits, Index y, std::vector<T>& seed) {
  using std::exp;
  using std::log;
  const auto p = softmax_t(logits);
  const std::size_t k = p.size();
  seed.assign(k, T(0.0));
  if (kind == LossKind::cross_entropy) {
    for (std::size_t c = 0; c < k; ++c) seed[c] = p[c] - T(static_cast<Index>(c) == y ? 1.0 : 0.0);
    // log-sum-exp form stays finite when p[y] underflows.
    double shift = value(logits[0]);
    for (const auto& zi : logits) shift = std::max(shift, value(zi));
    T sum(0.0);
    for (const auto& zi : logits) sum += exp(zi - T(shift));
    return T(shift) + log(sum) - logits[y];
  }
  std::vector<T> r(k);
  T loss(0.0);
  T pr(0.0);
  for (std::size_t c = 0; c < k; ++c) {
    r[c] = p[c] - T(static_cast<Index>(c) == y ? 1.0 : 0.0);
    loss += T(0.5) * r[c] * r[c];
    pr += p[c] * r[c];
  }
  for (std::size_t c = 0; c < k; ++c) seed[c] = p[c] * (r[c] - pr);
  return loss;
}

Index checked_label(double y, Index classes) {
  const auto label = static_cast<Index>(y);
  if (static_cast<double>(label) != y || label < 0 || label >= classes) {
    throw DataError("label " + std::to_string(y) + " is not a class index below " +
                    std::to_string(classes));
  }
  return label;
}

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::sigmoid ? "sigmoid" : "relu"; }

Activation activation_from_string(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(name) + "' (valid: sigmoid, relu)");
}

std::string_view to_string(LossKind l) {
  return l == LossKind::cross_entropy ? "cross_entropy" : "squared_error";
}

LossKind loss_from_string(std::string_view name) {
  if (name == "cross_entropy") return LossKind::cross_entropy;
  if (name == "squared_error") return LossKind::squared_error;
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (valid: cross_entropy, squared_error)");
}

void TrainConfig::validate() const {
  if (hidden.size() != 2) throw ConfigError("MLP must have exactly two hidden layers");
  for (Index h : hidden) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  }
  if (!(adam.step > 0 && adam.beta1 > 0 && adam.beta2 > 0 && adam.epsilon > 0)) {
    throw ConfigError("ADAM hyperparameters must be strictly positive");
  }
  if (adam.beta1 >= 1 || adam.beta2 >= 1) throw ConfigError("ADAM betas must be below 1");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (batch_size < 0) throw ConfigError("batch size must be non-negative");
  if (weight_decay < 0) throw ConfigError("weight decay must be non-negative");
}

Index Mlp::parameter_count(const std::vector<Index>& sizes) {
  Index p = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) p += sizes[l] * sizes[l + 1] + sizes[l + 1];
  return p;
}

Mlp::Mlp(std::vector<Index> layer_sizes, Activation activation, LossKind loss,
         double weight_decay, Vector theta)
    : sizes_(std::move(layer_sizes)),
      activation_(activation),
      loss_(loss),
      weight_decay_(weight_decay),
      theta_(std::move(theta)) {
  if (sizes_.size() < 2) throw ConfigError("MLP needs at least an input and output layer");
  if (theta_.size() != parameter_count(sizes_)) {
    throw ConfigError("MLP parameter vector has length " + std::to_string(theta_.size()) +
                      ", expected " + std::to_string(parameter_count(sizes_)));
  }
}

Vector Mlp::do_predict(const Vector& x) const {
  Network<double> net(sizes_, activation_, theta_.data());
  Tape<double> tape;
  const auto z = net.forward(x, tape);
  return softmax(Eigen::Map<const Vector>(z.data(), static_cast<Index>(z.size())));
}

Vector Mlp::do_grad_input(const Vector& x, Index output) const {
  Network<double> net(sizes_, activation_, theta_.data());
  Tape<double> tape;
  const auto z = net.forward(x, tape);
  const auto p = softmax_t(z);
  std::vector<double> seed(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    seed[k] = p[output] * ((static_cast<Index>(k) == output ? 1.0 : 0.0) - p[k]);
  }
  std::vector<double> dx;
  net.backward(tape, std::move(seed), nullptr, &dx);
  return Eigen::Map<const Vector>(dx.data(), static_cast<Index>(dx.size()));
}

double Mlp::do_loss(const Vector& x, double y) const {
  Network<double> net(sizes_, activation_, theta_.data());
  Tape<double> tape;
  std::vector<double> seed;
  return loss_and_seed(loss_, net.forward(x, tape), checked_label(y, output_dim()), seed);
}

Vector Mlp::do_grad_params(const Vector& x, double y) const {
  Network<double> net(sizes_, activation_, theta_.data());
  Tape<double> tape;
  std::vector<double> seed;
  loss_and_seed(loss_, net.forward(x, tape), checked_label(y, output_dim()), seed);
  Vector g = Vector::Zero(theta_.size());
  net.backward(tape, std::move(seed), g.data(), nullptr);
  return g;
}

Vector Mlp::do_hvp(const Dataset& data, const Vector& v) const {
  std::vector<Dual> theta(theta_.size());
  for (Index i = 0; i < theta_.size(); ++i) theta[i] = Dual(theta_(i), v(i));
  Network<Dual> net(sizes_, activation_, theta.data());
  std::vector<Dual> grad(theta_.size());
  Tape<Dual> tape;
  std::vector<Dual> seed;
  for (Index j = 0; j < data.size(); ++j) {
    const auto z = net.forward(data.features.col(j), tape);
    loss_and_seed(loss_, z, checked_label(data.labels(j), output_dim()), seed);
    net.backward(tape, std::move(seed), grad.data(), nullptr);
  }
  Vector out(theta_.size());
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (Index i = 0; i < theta_.size(); ++i) out(i) = grad[i].d * inv_n;
  out += weight_decay_ * v;
  return out;
}

double Mlp::objective(const Dataset& data) const {
  double total = 0.0;
  for (Index j = 0; j < data.size(); ++j) total += do_loss(data.features.col(j), data.labels(j));
  return total / static_cast<double>(data.size()) + 0.5 * weight_decay_ * theta_.squaredNorm();
}

nlohmann::json Mlp::to_json() const {
  return {{"kind", "mlp"},
          {"layer_sizes", sizes_},
          {"activation", to_string(activation_)},
          {"loss", to_string(loss_)},
          {"weight_decay", weight_decay_},
          {"theta", std::vector<double>(theta_.data(), theta_.data() + theta_.size())}};
}

std::unique_ptr<Mlp> Mlp::from_json(const nlohmann::json& j) {
  const auto theta = j.at("theta").get<std::vector<double>>();
  return std::make_unique<Mlp>(
      j.at("layer_sizes").get<std::vector<Index>>(),
      activation_from_string(j.at("activation").get<std::string>()),
      loss_from_string(j.at("loss").get<std::string>()), j.at("weight_decay").get<double>(),
      Eigen::Map<const Vector>(theta.data(), static_cast<Index>(theta.size())));
}

Vector init_mlp_parameters(const std::vector<Index>& sizes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector theta = Vector::Zero(Mlp::parameter_count(sizes));
  const auto off = layer_offsets(sizes);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
    std::uniform_real_distribution<double> uni(-limit, limit);
    for (Index i = 0; i < sizes[l] * sizes[l + 1]; ++i) theta(off.weight[l] + i) = uni(rng);
  }
  return theta;
}

std::unique_ptr<Mlp> train_mlp(const Dataset& train, const TrainConfig& config,
                               TrainingLog* log) {
  config.validate();
  if (train.size() == 0) throw DataError("cannot train on an empty dataset");
  const Index classes = std::max<Index>(train.class_count(), 2);
  std::vector<Index> sizes{train.dim()};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(classes);

  auto model = std::make_unique<Mlp>(sizes, config.activation, config.loss, config.weight_decay,
                                     init_mlp_parameters(sizes, config.seed));
  const Index n = train.size();
  const Index batch = config.batch_size > 0 ? std::min(config.batch_size, n)
                                            : (n <= 1000 ? n : std::min<Index>(64, n));
  // Shuffling draws from its own stream so initialization depends only on seed.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const double initial = model->objective(train);
  if (log != nullptr) {
    log->initial_loss = initial;
    log->epoch_loss.clear();
  }
  if (!std::isfinite(initial)) throw ConvergenceError("MLP: non-finite loss at initialization");

  const Index p = model->theta_.size();
  Vector m = Vector::Zero(p);
  Vector s = Vector::Zero(p);
  Vector grad(p);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < n; start += batch) {
      const Index end = std::min(n, start + batch);
      grad.setZero();
      for (Index b = start; b < end; ++b) {
        const Index j = order[b];
        grad += model->do_grad_params(train.features.col(j), train.labels(j));
      }
      grad /= static_cast<double>(end - start);
      grad += config.weight_decay * model->theta_;

      ++step;
      const auto& a = config.adam;
      m = a.beta1 * m + (1.0 - a.beta1) * grad;
      s = a.beta2 * s + (1.0 - a.beta2) * grad.cwiseAbs2();
      const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(step));
      model->theta_.array() -=
          a.step * (m.array() / c1) / ((s.array() / c2).sqrt() + a.epsilon);
    }
    const double loss = model->objective(train);
    if (!std::isfinite(loss)) {
      throw ConvergenceError("MLP training diverged at epoch " + std::to_string(epoch) +
                             " (non-finite loss); lower the ADAM step size");
    }
    if (log != nullptr) log->epoch_loss.push_back(loss);
  }
  spdlog::debug("mlp trained: loss {} -> {}", initial, model->objective(train));
  return model;
}

}  // namespace ava
