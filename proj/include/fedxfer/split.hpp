#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedxfer/dataset.hpp"
#include "fedxfer/matrix.hpp"

namespace fedxfer {

/// Deterministic feature permutation shared by the synthetic generator and
/// vertical_split, so "party B's feature half" means the same thing to both.
std::vector<std::uint32_t> feature_shuffle(std::size_t d, std::uint64_t seed);

struct SplitPlan {
  std::vector<std::uint32_t> features_a;  // first ceil(d/2) of the shuffle
  std::vector<std::uint32_t> features_b;  // the rest
  std::vector<std::uint32_t> rows_a;      // dataset row indices, labeled party
  std::vector<std::uint32_t> rows_b;      // dataset row indices, unlabeled party
  // positions into rows_a / rows_b that refer to the same underlying sample
  std::vector<std::pair<std::uint32_t, std::uint32_t>> overlap;
  std::uint64_t seed = 0;
};

/// Splits features half/half along the seeded shuffle and draws the two
/// parties' sample sets without replacement, sharing
/// round(overlap_frac * min(n_labeled, n_unlabeled)) co-occurring samples.
SplitPlan vertical_split(const EncodedDataset& ds, std::size_t n_labeled,
                         std::size_t n_unlabeled, double overlap_frac, std::uint64_t seed);

struct PartyViewA {
  Matrix x;
  std::vector<std::int8_t> y;
  std::vector<std::uint32_t> overlap_idx;  // into this view's rows
};

struct PartyViewB {
  Matrix x;  // deliberately label-free
  std::vector<std::uint32_t> overlap_idx;
};

/// B's ground-truth labels, kept apart from PartyViewB so the training path
/// cannot touch them; used only to score predictions.
struct SealedLabels {
  std::vector<std::int8_t> y;  // one per row of PartyViewB.x
};

struct SplitViews {
  PartyViewA a;
  PartyViewB b;
  SealedLabels sealed;
};

SplitViews make_views(const EncodedDataset& ds, const SplitPlan& plan);

std::string plan_to_json(const SplitPlan& plan);
SplitPlan plan_from_json(const std::string& text);

}  // namespace fedxfer
