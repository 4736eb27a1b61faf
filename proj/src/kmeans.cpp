#include "fedxfer/kmeans.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "fedxfer/error.hpp"
#include "fedxfer/rng.hpp"

namespace fedxfer {
namespace {

double sq_dist(const double* a, const double* b, std::size_t m) {
  double s = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return s;
}

bool rows_equal(const Matrix& z, std::uint32_t a, std::uint32_t b) {
  const double* ra = z.row_ptr(a);
  const double* rb = z.row_ptr(b);
  for (std::size_t c = 0; c < z.cols; ++c)
    if (ra[c] != rb[c]) return false;
  return true;
}

// k row indices in shuffled order, preferring value-distinct rows; duplicates
// fill the tail only when the data has fewer than k distinct values.
std::vector<std::uint32_t> initial_rows(const Matrix& z, std::size_t k, Rng& rng) {
  std::vector<std::uint32_t> order(z.rows);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(order);

  std::vector<std::uint32_t> chosen;
  std::vector<std::uint32_t> skipped;
  for (std::uint32_t idx : order) {
    if (chosen.size() == k) break;
    bool duplicate = false;
    for (std::uint32_t c : chosen)
      if (rows_equal(z, idx, c)) {
        duplicate = true;
        break;
      }
    (duplicate ? skipped : chosen).push_back(idx);
  }
  for (std::size_t i = 0; chosen.size() < k; ++i) chosen.push_back(skipped[i]);
  return chosen;
}

}  // namespace

KMeansModel kmeans(const Matrix& z, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  if (k < 1) fail(ErrorCode::config, "kmeans: k must be >= 1");
  if (z.rows < k)
    fail(ErrorCode::insufficient_data, "kmeans: " + std::to_string(z.rows) + " rows for k = " +
                                           std::to_string(k));

  const std::size_t m = z.cols;
  Rng rng(seed);
  KMeansModel km;
  km.centroids = Matrix(k, m);
  {
    const std::vector<std::uint32_t> rows = initial_rows(z, k, rng);
    for (std::size_t j = 0; j < k; ++j) {
      const double* src = z.row_ptr(rows[j]);
      double* dst = km.centroids.row_ptr(j);
      for (std::size_t c = 0; c < m; ++c) dst[c] = src[c];
    }
  }

  std::vector<std::uint32_t> assign(z.rows, 0);
  std::vector<std::uint32_t> prev_assign;

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < z.rows; ++i) {
      const double* p = z.row_ptr(i);
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double d = sq_dist(p, km.centroids.row_ptr(j), m);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(j);
        }
      }
      assign[i] = best;
      inertia += best_d;
    }
    km.inertia_history.push_back(inertia);
    km.inertia = inertia;
    if (assign == prev_assign) break;
    prev_assign = assign;

    Matrix sums(k, m);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < z.rows; ++i) {
      const double* p = z.row_ptr(i);
      double* s = sums.row_ptr(assign[i]);
      for (std::size_t c = 0; c < m; ++c) s[c] += p[c];
      counts[assign[i]] += 1;
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      double* dst = km.centroids.row_ptr(j);
      const double* s = sums.row_ptr(j);
      for (std::size_t c = 0; c < m; ++c) dst[c] = s[c] / static_cast<double>(counts[j]);
    }
    // reseed each emptied cluster at the point farthest from its own centroid
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < z.rows; ++i) {
        const double d = sq_dist(z.row_ptr(i), km.centroids.row_ptr(assign[i]), m);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      double* dst = km.centroids.row_ptr(j);
      const double* src = z.row_ptr(far);
      for (std::size_t c = 0; c < m; ++c) dst[c] = src[c];
    }
  }
  return km;
}

std::vector<double> anomaly_score(const Matrix& z, const KMeansModel& km) {
  if (km.centroids.rows != 2)
    fail(ErrorCode::config, "anomaly_score needs exactly 2 centroids, got " +
                                std::to_string(km.centroids.rows));
  if (z.cols != km.centroids.cols)
    fail(ErrorCode::dimension_mismatch,
         "anomaly_score: points are " + z.shape_str() + ", centroids are " +
             km.centroids.shape_str());
  std::vector<double> scores(z.rows);
  for (std::size_t i = 0; i < z.rows; ++i) {
    const double* p = z.row_ptr(i);
    scores[i] = std::sqrt(sq_dist(p, km.centroids.row_ptr(0), z.cols)) -
                std::sqrt(sq_dist(p, km.centroids.row_ptr(1), z.cols));
  }
  return scores;
}

}  // namespace fedxfer
