#pragma once

#include <cstdint>
#include <vector>

#include "fedxfer/matrix.hpp"
#include "fedxfer/mlp.hpp"

namespace fedxfer {

/// Batch of latent vectors, optionally with +/-1 labels. The payload that
/// crosses the party boundary.
struct LatentBatch {
  Matrix z;                     // n x k
  std::vector<std::int8_t> labels;  // empty when unlabeled, else length n

  bool labeled() const { return !labels.empty(); }
};

struct LossBreakdown {
  double j_b = 0.0;      // prediction loss over the overlap set
  double j_ab = 0.0;     // alignment loss over the overlap set
  double j_a_reg = 0.0;  // sum of squared weight norms, party A
  double j_b_reg = 0.0;  // sum of squared weight norms, party B
  double total = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

/// total = j_b + gamma*j_ab + (lambda/2)*(j_a_reg + j_b_reg), composed in
/// exactly this order so it can be recomputed bit-for-bit.
LossBreakdown total_loss(double j_b, double j_ab, double j_a_reg, double j_b_reg,
                         double gamma, double lambda);

struct LogisticLoss {
  double loss;    // log(1 + exp(-score*label)), overflow-safe
  double dscore;  // -label * sigmoid(-score*label)
};

/// label must be -1 or +1.
LogisticLoss logistic_loss(double score, int label);

/// Label-weighted mean of source latents: phi = (1/n) sum_i y_i * z_i.
std::vector<double> compute_prototype(const LatentBatch& za);

/// score_j = phi . z_j. Classification rule: score >= 0 maps to +1.
std::vector<double> prediction_score(const std::vector<double>& phi, const Matrix& zb);

struct PredictionLoss {
  double j_b;
  std::vector<double> dscore;  // one entry per overlap sample
};

/// Sum of logistic losses of (score_i, y_i) over the overlap set.
PredictionLoss prediction_loss(const std::vector<std::int8_t>& labels,
                               const std::vector<double>& scores);

enum class AlignmentKind { squared_distance, negative_inner_product };

AlignmentKind alignment_kind_from_name(const std::string& name);
std::string alignment_kind_name(AlignmentKind k);

struct AlignmentLoss {
  double j_ab;
  Matrix dza;  // d j_ab / d z^A, per overlap row
  Matrix dzb;  // d j_ab / d z^B, per overlap row
};

/// squared_distance: sum_i ||zA_i - zB_i||^2.
/// negative_inner_product: sum_i -(zA_i . zB_i).
/// Both enter the joint objective as a penalty with weight +gamma.
AlignmentLoss alignment_loss(const Matrix& za, const Matrix& zb, AlignmentKind kind);

/// Sum of squared Frobenius norms of the weight matrices; biases excluded.
double regularization(const MlpModel& model);

}  // namespace fedxfer
