#include "fedxfer/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedxfer/error.hpp"

namespace fedxfer {

AucResult roc_auc(const std::vector<double>& scores, const std::vector<std::int8_t>& labels) {
  if (scores.size() != labels.size())
    fail(ErrorCode::dimension_mismatch, "got " + std::to_string(scores.size()) + " scores for " +
                                            std::to_string(labels.size()) + " labels");
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1 && labels[i] != -1)
      fail(ErrorCode::label, "labels must be +1 or -1, got " + std::to_string(int(labels[i])));
    if (!std::isfinite(scores[i])) fail(ErrorCode::evaluation, "scores must be finite");
    (labels[i] == 1 ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0)
    fail(ErrorCode::evaluation, "AUC needs both classes; got " + std::to_string(pos) +
                                    " positives and " + std::to_string(neg) + " negatives");

  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

  // tie-averaged ranks keep the numerator a multiple of one half, so the sum
  // is exact and matches pairwise counting bit for bit
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += rank;
    i = j + 1;
  }
  const std::uint64_t pp = static_cast<std::uint64_t>(pos) * (static_cast<std::uint64_t>(pos) + 1) / 2;

  AucResult result;
  result.xi = (rank_sum_pos - static_cast<double>(pp)) /
              (static_cast<double>(pos) * static_cast<double>(neg));

  // sweep thresholds from high to low: everything scoring >= the threshold is
  // called positive
  result.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = order.size(); i > 0;) {
    std::size_t j = i;  // one past the tie group [k, j)
    const double value = scores[order[i - 1]];
    std::size_t k = i;
    while (k > 0 && scores[order[k - 1]] == value) --k;
    for (std::size_t t = k; t < j; ++t) (labels[order[t]] == 1 ? tp : fp) += 1;
    result.points.push_back({value, static_cast<double>(fp) / static_cast<double>(neg),
                             static_cast<double>(tp) / static_cast<double>(pos)});
    i = k;
  }
  return result;
}

}  // namespace fedxfer
