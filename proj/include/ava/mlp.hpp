#pragma once

#include "ava/predictor.hpp"

#include <cstdint>
#include <vector>

namespace ava {

enum class Activation { sigmoid, relu };
enum class LossKind { cross_entropy, squared_error };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);
std::string_view to_string(LossKind l);
LossKind loss_from_string(std::string_view name);

struct AdamConfig {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  // Widths of the two hidden layers; with the output layer that makes three
  // weight layers.
  std::vector<Index> hidden{16, 16};
  Activation activation = Activation::sigmoid;
  AdamConfig adam;
  int epochs = 500;
  // 0 selects full batch for N <= 1000 and 64 otherwise.
  Index batch_size = 0;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::cross_entropy;
  double weight_decay = 0.0;

  void validate() const;
};

struct TrainingLog {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
};

// Fully connected softmax classifier. Parameters are laid out layer by layer
// as (W_l row-major, b_l).
class Mlp final : public Predictor {
 public:
  Mlp(std::vector<Index> layer_sizes, Activation activation, LossKind loss, double weight_decay,
      Vector theta);

  ModelKind kind() const override { return ModelKind::mlp; }
  Capabilities capabilities() const override { return {true, true, true}; }
  Index input_dim() const override { return sizes_.front(); }
  Index output_dim() const override { return sizes_.back(); }
  const Vector& parameters() const override { return theta_; }

  const std::vector<Index>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  LossKind loss_kind() const { return loss_; }
  double weight_decay() const { return weight_decay_; }

  // Mean loss plus weight decay over a dataset.
  double objective(const Dataset& data) const;

  nlohmann::json to_json() const override;
  static std::unique_ptr<Mlp> from_json(const nlohmann::json& j);

  static Index parameter_count(const std::vector<Index>& layer_sizes);

 protected:
  Vector do_predict(const Vector& x) const override;
  Vector do_grad_input(const Vector& x, Index output) const override;
  double do_loss(const Vector& x, double y) const override;
  Vector do_grad_params(const Vector& x, double y) const override;
  Vector do_hvp(const Dataset& data, const Vector& v) const override;

 private:
  friend std::unique_ptr<Mlp> train_mlp(const Dataset&, const TrainConfig&, TrainingLog*);

  std::vector<Index> sizes_;
  Activation activation_;
  LossKind loss_;
  double weight_decay_;
  Vector theta_;
};

// Glorot-uniform weights, zero biases.
Vector init_mlp_parameters(const std::vector<Index>& layer_sizes, std::uint64_t seed);

std::unique_ptr<Mlp> train_mlp(const Dataset& train, const TrainConfig& config,
                               TrainingLog* log = nullptr);

}  // namespace ava
