#include "fedxfer/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedxfer/error.hpp"
#include "fedxfer/rng.hpp"

namespace fedxfer {

void AeConfig::validate() const {
  if (latent_dim < 1) fail(ErrorCode::config, "autoencoder latent dim must be >= 1");
  if (hidden_dim < 1) fail(ErrorCode::config, "autoencoder hidden dim must be >= 1");
  if (epochs < 1) fail(ErrorCode::config, "autoencoder epochs must be >= 1");
  if (!(eta > 0)) fail(ErrorCode::config, "autoencoder learning rate must be positive");
  if (batch < 1) fail(ErrorCode::config, "autoencoder batch size must be >= 1");
}

Matrix encode(const Autoencoder& ae, const Matrix& x) { return forward(ae.encoder, x); }

Matrix reconstruct(const Autoencoder& ae, const Matrix& x) {
  return forward(ae.decoder, forward(ae.encoder, x));
}

ReconstructionGrads reconstruction_gradients(const Autoencoder& ae, const Matrix& x) {
  ForwardCache enc_cache;
  const Matrix z = forward(ae.encoder, x, &enc_cache);
  ForwardCache dec_cache;
  const Matrix xhat = forward(ae.decoder, z, &dec_cache);

  ReconstructionGrads out;
  out.error = 0.0;
  Matrix upstream(xhat.rows, xhat.cols);
  for (std::size_t i = 0; i < xhat.data.size(); ++i) {
    const double diff = xhat.data[i] - x.data[i];
    out.error += diff * diff;
    upstream.data[i] = 2.0 * diff;
  }

  BackwardResult dec_bw = backward(ae.decoder, dec_cache, upstream);
  BackwardResult enc_bw = backward(ae.encoder, enc_cache, dec_bw.input_grad);
  out.decoder = std::move(dec_bw.grads);
  out.encoder = std::move(enc_bw.grads);
  return out;
}

AeTrainResult train_autoencoder(const Matrix& x, const AeConfig& config, std::uint64_t seed) {
  config.validate();
  if (x.rows == 0) fail(ErrorCode::insufficient_data, "autoencoder: empty dataset");

  AeTrainResult result;
  result.model.encoder = init_model({x.cols, config.hidden_dim, config.latent_dim},
                                    config.activation, derive_seed(seed, "encoder"));
  result.model.decoder = init_model({config.latent_dim, config.hidden_dim, x.cols},
                                    config.activation, derive_seed(seed, "decoder"));

  auto total_error = [&] {
    const Matrix xhat = reconstruct(result.model, x);
    double err = 0.0;
    for (std::size_t i = 0; i < xhat.data.size(); ++i) {
      const double diff = xhat.data[i] - x.data[i];
      err += diff * diff;
    }
    return err;
  };

  result.trace.reserve(config.epochs + 1);
  result.trace.push_back(total_error());

  Rng order_rng(derive_seed(seed, "epoch-order"));
  std::vector<std::uint32_t> order(x.rows);
  std::iota(order.begin(), order.end(), 0u);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch) {
      const std::size_t end = std::min(begin + config.batch, order.size());
      const std::vector<std::uint32_t> batch_rows(order.begin() + begin, order.begin() + end);
      const Matrix xb = select_rows(x, batch_rows);
      const ReconstructionGrads g = reconstruction_gradients(result.model, xb);
      // batch-mean step: the gradients are batch sums, so fold 1/|batch| into the rate
      const double step = config.eta / static_cast<double>(batch_rows.size());
      sgd_step(result.model.encoder, g.encoder, step);
      sgd_step(result.model.decoder, g.decoder, step);
    }
    const double err = total_error();
    if (!std::isfinite(err))
      fail(ErrorCode::numeric, "autoencoder error became non-finite at epoch " +
                                   std::to_string(epoch + 1) + "; try a smaller learning rate");
    result.trace.push_back(err);
  }
  return result;
}

}  // namespace fedxfer
