#pragma once

#include <cstdint>
#include <vector>

namespace fedxfer {

struct RocPoint {
  double threshold = 0.0;  // samples with score >= threshold count as positive
  double fpr = 0.0;
  double tpr = 0.0;
};

struct AucResult {
  std::vector<RocPoint> points;  // monotone from (0, 0) to (1, 1)
  double xi = 0.0;               // area under the curve, in [0, 1]
};

/// Computes the ROC sweep and the AUC by the rank formulation (tied pairs
/// contribute one half). Labels are +1 (positive) and -1 (negative); both
/// classes must be present.
AucResult roc_auc(const std::vector<double>& scores, const std::vector<std::int8_t>& labels);

}  // namespace fedxfer
