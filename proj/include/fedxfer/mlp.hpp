#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedxfer/matrix.hpp"

namespace fedxfer {

enum class Activation { tanh_act, relu, identity };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

/// Multi-layer perceptron: linear layers with a shared hidden activation and
/// a linear output layer. weights[l] has shape layer_dims[l] x layer_dims[l+1].
struct MlpModel {
  std::vector<std::size_t> layer_dims;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  Activation hidden_activation = Activation::tanh_act;

  std::size_t num_layers() const { return weights.size(); }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t param_count() const;
  bool all_finite() const;
};

/// Parameter-shaped gradient holder, congruent with its model.
struct ParamGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  static ParamGrads zeros_like(const MlpModel& m);
  void add_scaled(const ParamGrads& other, double scale);
  bool all_finite() const;
};

/// Per-layer activations kept from a forward pass; activations[0] is the
/// input batch and activations[L] the linear output.
struct ForwardCache {
  std::vector<Matrix> activations;

  std::size_t batch_size() const {
    return activations.empty() ? 0 : activations.front().rows;
  }
};

/// Glorot-uniform weights in +/- sqrt(6/(fan_in+fan_out)) drawn from
/// xoshiro256++ seeded with `seed` (layer by layer, row-major within a
/// layer); biases start at zero. Identical seed gives a bit-identical model.
MlpModel init_model(const std::vector<std::size_t>& layer_dims, Activation hidden,
                    std::uint64_t seed);

/// x is n x input_dim; returns n x output_dim. Hidden layers apply the
/// configured activation, the last layer is linear. Pass a cache to enable
/// backward().
Matrix forward(const MlpModel& model, const Matrix& x, ForwardCache* cache = nullptr);

struct BackwardResult {
  ParamGrads grads;
  Matrix input_grad;  // d(sum upstream.z)/dx, needed when models are chained
};

/// Reverse-mode gradients of sum_{i,j} upstream[i][j] * z[i][j] with respect
/// to every parameter (and the input batch). Gradients are batch sums.
BackwardResult backward(const MlpModel& model, const ForwardCache& cache,
                        const Matrix& upstream);

/// In-place p <- p - eta * g. Throws on a non-finite gradient entry.
void sgd_step(MlpModel& model, const ParamGrads& grads, double learning_rate);

std::string model_to_json(const MlpModel& model);
MlpModel model_from_json(const std::string& text);

}  // namespace fedxfer
