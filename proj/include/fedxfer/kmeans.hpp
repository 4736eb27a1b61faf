#pragma once

#include <cstdint>
#include <vector>

#include "fedxfer/matrix.hpp"

namespace fedxfer {

struct KMeansModel {
  Matrix centroids;  // k x m
  double inertia = 0.0;
  std::vector<double> inertia_history;  // one entry per Lloyd iteration
};

/// Lloyd's algorithm. Initial centroids are k rows drawn by the seeded PRNG,
/// preferring rows with pairwise-distinct values; ties in assignment go to the
/// lower centroid index; an emptied cluster is reseeded to the point farthest
/// from its current centroid. Stops at an assignment fixed point or max_iters.
KMeansModel kmeans(const Matrix& z, std::size_t k, std::uint64_t seed,
                   std::size_t max_iters = 100);

/// Signed two-centroid score: dist(z_i, c0) - dist(z_i, c1). Cluster identity
/// is arbitrary, so AUC consumers fold orientation via max(auc, 1 - auc).
std::vector<double> anomaly_score(const Matrix& z, const KMeansModel& km);

}  // namespace fedxfer
