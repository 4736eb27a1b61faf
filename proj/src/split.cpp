#include "fedxfer/split.hpp"

#include <cmath>
#include <json.hpp>

#include "fedxfer/error.hpp"
#include "fedxfer/rng.hpp"

namespace fedxfer {

std::vector<std::uint32_t> feature_shuffle(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  return random_permutation(d, rng);
}

SplitPlan vertical_split(const EncodedDataset& ds, std::size_t n_labeled,
                         std::size_t n_unlabeled, double overlap_frac, std::uint64_t seed) {
  const std::size_t n = ds.x.rows;
  const std::size_t d = ds.x.cols;
  if (d < 2) fail(ErrorCode::split, "need at least 2 features to split, got " + std::to_string(d));
  if (n_labeled == 0 || n_unlabeled == 0)
    fail(ErrorCode::split, "both parties need at least one sample");
  if (!(overlap_frac >= 0.0 && overlap_frac <= 1.0))
    fail(ErrorCode::split, "overlap fraction must lie in [0, 1]");
  const std::size_t ov =
      static_cast<std::size_t>(std::llround(overlap_frac * static_cast<double>(std::min(n_labeled, n_unlabeled))));
  if (n_labeled + n_unlabeled - ov > n)
    fail(ErrorCode::split, "dataset has " + std::to_string(n) + " rows but the split needs " +
                               std::to_string(n_labeled + n_unlabeled - ov) + " distinct samples");

  SplitPlan plan;
  plan.seed = seed;

  const std::vector<std::uint32_t> fperm = feature_shuffle(d, derive_seed(seed, "features"));
  const std::size_t da = (d + 1) / 2;
  plan.features_a.assign(fperm.begin(), fperm.begin() + static_cast<std::ptrdiff_t>(da));
  plan.features_b.assign(fperm.begin() + static_cast<std::ptrdiff_t>(da), fperm.end());

  Rng rows_rng(derive_seed(seed, "samples"));
  const std::vector<std::uint32_t> rperm = random_permutation(n, rows_rng);
  plan.rows_a.assign(rperm.begin(), rperm.begin() + static_cast<std::ptrdiff_t>(n_labeled));
  // B starts ov rows before A's end, so the tail of A and the head of B
  // reference the same samples
  const std::size_t b_start = n_labeled - ov;
  plan.rows_b.assign(rperm.begin() + static_cast<std::ptrdiff_t>(b_start),
                     rperm.begin() + static_cast<std::ptrdiff_t>(b_start + n_unlabeled));
  plan.overlap.reserve(ov);
  for (std::size_t j = 0; j < ov; ++j)
    plan.overlap.emplace_back(static_cast<std::uint32_t>(b_start + j), static_cast<std::uint32_t>(j));
  return plan;
}

SplitViews make_views(const EncodedDataset& ds, const SplitPlan& plan) {
  if (!ds.labeled())
    fail(ErrorCode::split, "party A's view needs a labeled dataset");
  for (auto r : plan.rows_a)
    if (r >= ds.x.rows) fail(ErrorCode::split, "plan row index out of range");
  for (auto r : plan.rows_b)
    if (r >= ds.x.rows) fail(ErrorCode::split, "plan row index out of range");
  for (auto f : plan.features_a)
    if (f >= ds.x.cols) fail(ErrorCode::split, "plan feature index out of range");
  for (auto f : plan.features_b)
    if (f >= ds.x.cols) fail(ErrorCode::split, "plan feature index out of range");
  for (auto [ia, ib] : plan.overlap) {
    if (ia >= plan.rows_a.size() || ib >= plan.rows_b.size())
      fail(ErrorCode::split, "overlap position out of range");
    if (plan.rows_a[ia] != plan.rows_b[ib])
      fail(ErrorCode::split, "overlap pair does not reference the same sample");
  }

  SplitViews views;
  views.a.x = select_cols(select_rows(ds.x, plan.rows_a), plan.features_a);
  views.a.y.reserve(plan.rows_a.size());
  for (auto r : plan.rows_a) views.a.y.push_back(ds.y[r]);
  views.a.overlap_idx.reserve(plan.overlap.size());
  for (auto [ia, ib] : plan.overlap) views.a.overlap_idx.push_back(ia);

  views.b.x = select_cols(select_rows(ds.x, plan.rows_b), plan.features_b);
  views.b.overlap_idx.reserve(plan.overlap.size());
  for (auto [ia, ib] : plan.overlap) views.b.overlap_idx.push_back(ib);

  views.sealed.y.reserve(plan.rows_b.size());
  for (auto r : plan.rows_b) views.sealed.y.push_back(ds.y[r]);
  return views;
}

std::string plan_to_json(const SplitPlan& plan) {
  nlohmann::json j;
  j["seed"] = plan.seed;
  j["features_a"] = plan.features_a;
  j["features_b"] = plan.features_b;
  j["rows_a"] = plan.rows_a;
  j["rows_b"] = plan.rows_b;
  nlohmann::json ov = nlohmann::json::array();
  for (auto [ia, ib] : plan.overlap) ov.push_back({ia, ib});
  j["overlap"] = ov;
  return j.dump(2) + "\n";
}

SplitPlan plan_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    SplitPlan plan;
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.features_a = j.at("features_a").get<std::vector<std::uint32_t>>();
    plan.features_b = j.at("features_b").get<std::vector<std::uint32_t>>();
    plan.rows_a = j.at("rows_a").get<std::vector<std::uint32_t>>();
    plan.rows_b = j.at("rows_b").get<std::vector<std::uint32_t>>();
    for (const auto& pair : j.at("overlap")) {
      if (!pair.is_array() || pair.size() != 2)
        fail(ErrorCode::load, "overlap entries must be [a, b] pairs");
      plan.overlap.emplace_back(pair[0].get<std::uint32_t>(), pair[1].get<std::uint32_t>());
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::load, std::string("bad split plan: ") + e.what());
  }
}

}  // namespace fedxfer
