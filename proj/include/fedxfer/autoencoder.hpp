#pragma once

#include <cstdint>
#include <vector>

#include "fedxfer/matrix.hpp"
#include "fedxfer/mlp.hpp"

namespace fedxfer {

struct Autoencoder {
  MlpModel encoder;  // n -> hidden -> m
  MlpModel decoder;  // m -> hidden -> n
};

struct AeConfig {
  std::size_t latent_dim = 2;
  std::size_t hidden_dim = 64;
  std::size_t epochs = 200;
  double eta = 0.01;
  std::size_t batch = 32;  // minibatch rows; the step uses the batch-mean gradient
  Activation activation = Activation::tanh_act;

  void validate() const;
};

struct AeTrainResult {
  Autoencoder model;
  // total squared reconstruction error over the dataset; entry 0 is the
  // untrained model, then one entry per epoch
  std::vector<double> trace;
};

/// Joint SGD over encoder and decoder on the squared reconstruction error.
/// Row order is reshuffled each epoch from the seed.
AeTrainResult train_autoencoder(const Matrix& x, const AeConfig& config, std::uint64_t seed);

Matrix encode(const Autoencoder& ae, const Matrix& x);
Matrix reconstruct(const Autoencoder& ae, const Matrix& x);

struct ReconstructionGrads {
  ParamGrads encoder;
  ParamGrads decoder;
  double error;  // sum over the batch of ||x - g(f(x))||^2
};

/// Gradients of the batch-sum reconstruction error, the quantity the
/// finite-difference oracle checks; the trainer rescales these to batch means.
ReconstructionGrads reconstruction_gradients(const Autoencoder& ae, const Matrix& x);

}  // namespace fedxfer
