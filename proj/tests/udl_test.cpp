#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fedxfer/autoencoder.hpp"
#include "fedxfer/error.hpp"
#include "fedxfer/kmeans.hpp"
#include "fedxfer/matrix.hpp"
#include "fedxfer/rng.hpp"
#include "fedxfer/udl.hpp"
#include "test_util.hpp"

using namespace fedxfer;
using testutil::random_matrix;
using testutil::rel_err;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::harness;
}

// Two well-separated 2-d blobs, unit-scale noise against distance 20.
Matrix two_blobs(std::size_t per_blob, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(2 * per_blob, 2);
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    const double cx = i < per_blob ? -10.0 : 10.0;
    x.at(i, 0) = cx + rng.next_normal();
    x.at(i, 1) = rng.next_normal();
  }
  return x;
}

}  // namespace

TEST_CASE("single-cluster kmeans recovers the column mean") {
  Rng rng(91);
  const Matrix x = random_matrix(17, 3, rng, 4.0);
  const KMeansModel km = kmeans(x, 1, 5);
  REQUIRE(km.centroids.rows == 1);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) mean += x.at(i, c);
    mean /= static_cast<double>(x.rows);
    CHECK(km.centroids.at(0, c) == doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("two-means separates distant blobs") {
  const Matrix x = two_blobs(40, 92);
  const KMeansModel km = kmeans(x, 2, 7);
  REQUIRE(km.centroids.rows == 2);

  // Match each true center to its nearest centroid, order-agnostic.
  for (const double cx : {-10.0, 10.0}) {
    double best = 1e300;
    for (std::size_t j = 0; j < 2; ++j) {
      const double dx = km.centroids.at(j, 0) - cx;
      const double dy = km.centroids.at(j, 1);
      best = std::min(best, std::sqrt(dx * dx + dy * dy));
    }
    CHECK(best < 0.5);
  }

  REQUIRE(!km.inertia_history.empty());
  for (std::size_t i = 1; i < km.inertia_history.size(); ++i)
    CHECK(km.inertia_history[i] <= km.inertia_history[i - 1]);
  CHECK(km.inertia == km.inertia_history.back());
}

TEST_CASE("kmeans on identical points has zero inertia") {
  Matrix x(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    x.at(i, 0) = 3.5;
    x.at(i, 1) = -1.25;
  }
  const KMeansModel km = kmeans(x, 2, 11);
  CHECK(km.inertia == 0.0);
}

TEST_CASE("kmeans input validation") {
  Rng rng(93);
  const Matrix x = random_matrix(3, 2, rng);
  CHECK(code_of([&] { kmeans(x, 0, 1); }) == ErrorCode::config);
  CHECK(code_of([&] { kmeans(x, 4, 1); }) == ErrorCode::insufficient_data);
}

TEST_CASE("kmeans is deterministic in the seed") {
  const Matrix x = two_blobs(25, 94);
  const KMeansModel a = kmeans(x, 2, 42);
  const KMeansModel b = kmeans(x, 2, 42);
  CHECK(a.centroids == b.centroids);
  CHECK(a.inertia == b.inertia);
  CHECK(a.inertia_history == b.inertia_history);
}

TEST_CASE("anomaly scores are signed centroid-distance differences") {
  KMeansModel km;
  km.centroids = Matrix::from_rows({{0.0, 0.0}, {2.0, 0.0}});

  Matrix pts(3, 2);
  pts.at(0, 0) = 1.0;   // equidistant
  pts.at(0, 1) = 0.7;
  pts.at(1, 0) = 2.0;   // exactly at c1
  pts.at(1, 1) = 0.0;
  pts.at(2, 0) = 0.0;   // exactly at c0
  pts.at(2, 1) = 0.0;
  const std::vector<double> s = anomaly_score(pts, km);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 2.0);
  CHECK(s[2] == -2.0);

  KMeansModel swapped;
  swapped.centroids = Matrix::from_rows({{2.0, 0.0}, {0.0, 0.0}});
  const std::vector<double> t = anomaly_score(pts, swapped);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(t[i] == -s[i]);

  KMeansModel three;
  three.centroids = Matrix(3, 2);
  CHECK(code_of([&] { anomaly_score(pts, three); }) == ErrorCode::config);
  KMeansModel narrow;
  narrow.centroids = Matrix(2, 3);
  CHECK(code_of([&] { anomaly_score(pts, narrow); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("autoencoder config validation") {
  CHECK_NOTHROW(AeConfig{}.validate());
  AeConfig c;
  c.latent_dim = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::config);
  c = AeConfig{};
  c.hidden_dim = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::config);
  c = AeConfig{};
  c.epochs = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::config);
  c = AeConfig{};
  c.eta = 0.0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::config);
  c = AeConfig{};
  c.batch = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::config);
}

TEST_CASE("reconstruction gradients match finite differences") {
  Rng rng(95);
  const Matrix x = random_matrix(3, 3, rng);
  Autoencoder ae;
  ae.encoder = init_model({3, 3, 2}, Activation::tanh_act, derive_seed(95, "encoder"));
  ae.decoder = init_model({2, 3, 3}, Activation::tanh_act, derive_seed(95, "decoder"));

  const ReconstructionGrads g = reconstruction_gradients(ae, x);
  const double eps = 1e-5;
  int checked = 0;
  auto check_param = [&](double& slot, double grad) {
    const double saved = slot;
    slot = saved + eps;
    const double jp = reconstruction_gradients(ae, x).error;
    slot = saved - eps;
    const double jm = reconstruction_gradients(ae, x).error;
    slot = saved;
    CHECK(rel_err((jp - jm) / (2 * eps), grad) < 1e-4);
    ++checked;
  };
  for (std::size_t l = 0; l < ae.encoder.weights.size(); ++l) {
    for (std::size_t i = 0; i < ae.encoder.weights[l].data.size(); ++i)
      check_param(ae.encoder.weights[l].data[i], g.encoder.weights[l].data[i]);
    for (std::size_t i = 0; i < ae.encoder.biases[l].size(); ++i)
      check_param(ae.encoder.biases[l][i], g.encoder.biases[l][i]);
  }
  for (std::size_t l = 0; l < ae.decoder.weights.size(); ++l) {
    for (std::size_t i = 0; i < ae.decoder.weights[l].data.size(); ++i)
      check_param(ae.decoder.weights[l].data[i], g.decoder.weights[l].data[i]);
    for (std::size_t i = 0; i < ae.decoder.biases[l].size(); ++i)
      check_param(ae.decoder.biases[l][i], g.decoder.biases[l][i]);
  }
  CHECK(checked == 41);
}

TEST_CASE("autoencoder drives a constant dataset almost to zero error") {
  Matrix x(12, 3);
  for (std::size_t i = 0; i < x.rows; ++i) {
    x.at(i, 0) = 0.3;
    x.at(i, 1) = 0.6;
    x.at(i, 2) = 0.9;
  }
  AeConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden_dim = 4;
  const AeTrainResult r = train_autoencoder(x, cfg, 123);
  REQUIRE(r.trace.size() == cfg.epochs + 1);
  CHECK(r.trace[0] > 0.0);
  CHECK(r.trace.back() < 1e-3 * r.trace[0]);
}

TEST_CASE("linear autoencoder with full-width latent reaches near-identity") {
  Rng rng(96);
  const Matrix x = random_matrix(16, 2, rng, 0.5);
  AeConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden_dim = 4;
  cfg.activation = Activation::identity;
  cfg.epochs = 3000;
  cfg.eta = 0.1;
  cfg.batch = 4;
  const AeTrainResult r = train_autoencoder(x, cfg, 321);
  CHECK(r.trace.back() < 1e-6 * r.trace[0]);

  // The reconstruction really is near the input, not just on the trace.
  const Matrix xhat = reconstruct(r.model, x);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(std::abs(xhat.data[i] - x.data[i]) < 1e-3);
}

TEST_CASE("training trace starts at the untrained model and descends") {
  const Matrix x = two_blobs(20, 97);
  AeConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden_dim = 6;
  cfg.epochs = 50;

  // Entry 0 is the untrained model: bitwise-reproducible from the same seed.
  Autoencoder fresh;
  fresh.encoder = init_model({x.cols, cfg.hidden_dim, cfg.latent_dim}, cfg.activation,
                             derive_seed(555, "encoder"));
  fresh.decoder = init_model({cfg.latent_dim, cfg.hidden_dim, x.cols}, cfg.activation,
                             derive_seed(555, "decoder"));
  const double untrained = reconstruction_gradients(fresh, x).error;

  const AeTrainResult r = train_autoencoder(x, cfg, 555);
  CHECK(r.trace[0] == untrained);
  CHECK(r.trace.back() < r.trace[0]);
  for (const double e : r.trace) {
    CHECK(std::isfinite(e));
    CHECK(e >= 0.0);
  }
}

TEST_CASE("autoencoder rejects an empty dataset and diverges loudly") {
  AeConfig cfg;
  cfg.latent_dim = 2;
  cfg.hidden_dim = 3;
  CHECK(code_of([&] { train_autoencoder(Matrix(0, 3), cfg, 1); }) ==
        ErrorCode::insufficient_data);

  Rng rng(98);
  const Matrix x = random_matrix(8, 3, rng, 2.0);
  AeConfig hot = cfg;
  hot.eta = 1e9;
  hot.epochs = 50;
  try {
    train_autoencoder(x, hot, 2);
    FAIL("training should have diverged");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric);
    CHECK(std::string(e.what()).find("smaller learning rate") != std::string::npos);
  }
}

TEST_CASE("udl pipeline is deterministic and applies the latent-width rule") {
  const Matrix x = two_blobs(30, 99);
  const UdlResult a = run_udl(x, 2024);
  const UdlResult b = run_udl(x, 2024);
  CHECK(a.scores == b.scores);
  CHECK(a.km.centroids == b.km.centroids);
  CHECK(a.ae_trace == b.ae_trace);
  REQUIRE(a.scores.size() == x.rows);

  // d=2 -> max(2, ceil(2/8)) = 2.
  CHECK(a.ae.encoder.output_dim() == 2);

  Rng rng(100);
  const UdlResult wide = run_udl(random_matrix(40, 20, rng), 7);
  CHECK(wide.ae.encoder.output_dim() == 3);  // ceil(20/8)
  const UdlResult mid = run_udl(random_matrix(40, 17, rng), 7);
  CHECK(mid.ae.encoder.output_dim() == 3);   // ceil(17/8)

  const UdlResult c = run_udl(x, 2025);
  CHECK(c.scores != a.scores);
}
