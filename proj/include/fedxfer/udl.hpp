#pragma once

#include <cstdint>
#include <vector>

#include "fedxfer/autoencoder.hpp"
#include "fedxfer/kmeans.hpp"
#include "fedxfer/matrix.hpp"

namespace fedxfer {

struct UdlResult {
  Autoencoder ae;
  KMeansModel km;
  std::vector<double> scores;    // anomaly score per input row
  std::vector<double> ae_trace;  // reconstruction error, entry 0 untrained
};

/// The unsupervised pipeline: autoencoder reduction to max(2, ceil(d/8))
/// dimensions, 2-means on the codes, centroid-distance anomaly scores. The
/// latent width of `config` is overridden by the d/8 rule.
UdlResult run_udl(const Matrix& x, std::uint64_t seed, const AeConfig& config = AeConfig{});

}  // namespace fedxfer
