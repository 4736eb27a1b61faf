#include "fedxfer/losses.hpp"

#include <cmath>

#include "fedxfer/error.hpp"

namespace fedxfer {

LossBreakdown total_loss(double j_b, double j_ab, double j_a_reg, double j_b_reg,
                         double gamma, double lambda) {
  LossBreakdown out;
  out.j_b = j_b;
  out.j_ab = j_ab;
  out.j_a_reg = j_a_reg;
  out.j_b_reg = j_b_reg;
  out.total = j_b + gamma * j_ab + (lambda / 2.0) * (j_a_reg + j_b_reg);
  return out;
}

LogisticLoss logistic_loss(double score, int label) {
  if (label != 1 && label != -1)
    fail(ErrorCode::label, "logistic_loss: label must be -1 or +1, got " + std::to_string(label));
  const double m = -score * static_cast<double>(label);
  LogisticLoss out;
  if (m > 30.0) {
    // exp(m) would dwarf the 1; log1p(exp(m)) == m to double precision.
    out.loss = m;
    out.dscore = -static_cast<double>(label);
  } else {
    out.loss = std::log1p(std::exp(m));
    // sigmoid(m) written via exp(m) so the same exponential feeds both paths
    const double e = std::exp(m);
    out.dscore = -static_cast<double>(label) * (e / (1.0 + e));
  }
  return out;
}

std::vector<double> compute_prototype(const LatentBatch& za) {
  if (!za.labeled())
    fail(ErrorCode::label, "compute_prototype: source batch carries no labels");
  if (za.labels.size() != za.z.rows)
    fail(ErrorCode::dimension_mismatch,
         "compute_prototype: " + std::to_string(za.labels.size()) + " labels for " +
             std::to_string(za.z.rows) + " rows");
  if (za.z.rows == 0)
    fail(ErrorCode::insufficient_data, "compute_prototype: empty batch");
  const std::size_t n = za.z.rows;
  const std::size_t k = za.z.cols;
  std::vector<double> phi(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = static_cast<double>(za.labels[i]);
    const double* row = za.z.row_ptr(i);
    for (std::size_t c = 0; c < k; ++c) phi[c] += y * row[c];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : phi) v *= inv;
  return phi;
}

std::vector<double> prediction_score(const std::vector<double>& phi, const Matrix& zb) {
  if (phi.size() != zb.cols)
    fail(ErrorCode::dimension_mismatch,
         "prediction_score: prototype dim " + std::to_string(phi.size()) +
             " vs latent dim " + std::to_string(zb.cols));
  std::vector<double> scores(zb.rows, 0.0);
  for (std::size_t i = 0; i < zb.rows; ++i) {
    const double* row = zb.row_ptr(i);
    double s = 0.0;
    for (std::size_t c = 0; c < zb.cols; ++c) s += phi[c] * row[c];
    scores[i] = s;
  }
  return scores;
}

PredictionLoss prediction_loss(const std::vector<std::int8_t>& labels,
                               const std::vector<double>& scores) {
  if (labels.size() != scores.size())
    fail(ErrorCode::dimension_mismatch,
         "prediction_loss: " + std::to_string(labels.size()) + " labels vs " +
             std::to_string(scores.size()) + " scores");
  PredictionLoss out;
  out.j_b = 0.0;
  out.dscore.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const LogisticLoss l = logistic_loss(scores[i], labels[i]);
    out.j_b += l.loss;
    out.dscore[i] = l.dscore;
  }
  return out;
}

AlignmentKind alignment_kind_from_name(const std::string& name) {
  if (name == "squared_distance") return AlignmentKind::squared_distance;
  if (name == "negative_inner_product") return AlignmentKind::negative_inner_product;
  fail(ErrorCode::config, "unknown alignment kind '" + name + "'");
}

std::string alignment_kind_name(AlignmentKind k) {
  return k == AlignmentKind::squared_distance ? "squared_distance" : "negative_inner_product";
}

AlignmentLoss alignment_loss(const Matrix& za, const Matrix& zb, AlignmentKind kind) {
  if (!za.same_shape(zb))
    fail(ErrorCode::dimension_mismatch,
         "alignment_loss: shapes " + za.shape_str() + " and " + zb.shape_str() + " disagree");
  AlignmentLoss out;
  out.j_ab = 0.0;
  out.dza = Matrix(za.rows, za.cols);
  out.dzb = Matrix(za.rows, za.cols);
  for (std::size_t i = 0; i < za.rows; ++i) {
    const double* a = za.row_ptr(i);
    const double* b = zb.row_ptr(i);
    double* da = out.dza.row_ptr(i);
    double* db = out.dzb.row_ptr(i);
    if (kind == AlignmentKind::squared_distance) {
      for (std::size_t c = 0; c < za.cols; ++c) {
        const double d = a[c] - b[c];
        out.j_ab += d * d;
        da[c] = 2.0 * d;
        db[c] = -2.0 * d;
      }
    } else {
      for (std::size_t c = 0; c < za.cols; ++c) {
        out.j_ab -= a[c] * b[c];
        da[c] = -b[c];
        db[c] = -a[c];
      }
    }
  }
  return out;
}

double regularization(const MlpModel& model) {
  double sum = 0.0;
  for (const Matrix& w : model.weights) sum += frobenius_norm_sq(w);
  return sum;
}

}  // namespace fedxfer
