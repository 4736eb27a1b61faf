#include "fedxfer/udl.hpp"

#include <algorithm>

#include "fedxfer/rng.hpp"

namespace fedxfer {

UdlResult run_udl(const Matrix& x, std::uint64_t seed, const AeConfig& base) {
  AeConfig config = base;
  config.latent_dim = std::max<std::size_t>(2, (x.cols + 7) / 8);

  AeTrainResult trained = train_autoencoder(x, config, derive_seed(seed, "udl-ae"));
  const Matrix z = encode(trained.model, x);
  KMeansModel km = kmeans(z, 2, derive_seed(seed, "udl-kmeans"));

  UdlResult out;
  out.scores = anomaly_score(z, km);
  out.ae = std::move(trained.model);
  out.km = std::move(km);
  out.ae_trace = std::move(trained.trace);
  return out;
}

}  // namespace fedxfer
