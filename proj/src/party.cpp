#include "fedxfer/party.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include "fedxfer/error.hpp"

namespace fedxfer {
namespace {

// Report verification compares bit patterns, not float values: identical
// deterministic computation on both sides must yield identical bits, and a
// NaN-poisoned objective must reach the divergence check instead of being
// misread as a disagreeing peer.
bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

void check_overlap_indices(const std::vector<std::uint32_t>& ov, std::size_t rows,
                           const char* who) {
  for (std::uint32_t idx : ov)
    if (idx >= rows)
      fail(ErrorCode::dimension_mismatch, std::string(who) + ": overlap index " +
                                              std::to_string(idx) + " out of range for " +
                                              std::to_string(rows) + " rows");
}

void check_labels(const std::vector<std::int8_t>& y) {
  for (std::int8_t l : y)
    if (l != 1 && l != -1)
      fail(ErrorCode::label, "labels must be -1 or +1, got " + std::to_string(int(l)));
}

std::vector<std::int8_t> overlap_labels(const std::vector<std::int8_t>& y,
                                        const std::vector<std::uint32_t>& ov) {
  std::vector<std::int8_t> out(ov.size());
  for (std::size_t p = 0; p < ov.size(); ++p) out[p] = y[ov[p]];
  return out;
}

struct SharedWork {
  PredictionLoss pred;
  AlignmentLoss align;
};

// The loss terms both parties can compute once the overlap latents, labels
// and prototype are on both sides. Inputs are bit-identical across the wire,
// so both parties arrive at bit-identical values.
SharedWork shared_losses(const Matrix& za_ov, const Matrix& zb_ov,
                         const std::vector<std::int8_t>& y_ov, const std::vector<double>& phi,
                         AlignmentKind kind) {
  SharedWork w;
  const std::vector<double> scores = prediction_score(phi, zb_ov);
  w.pred = prediction_loss(y_ov, scores);
  w.align = alignment_loss(za_ov, zb_ov, kind);
  return w;
}

void add_weight_decay(ParamGrads& grads, const MlpModel& model, double lambda) {
  for (std::size_t l = 0; l < model.weights.size(); ++l)
    for (std::size_t i = 0; i < model.weights[l].data.size(); ++i)
      grads.weights[l].data[i] += lambda * model.weights[l].data[i];
}

// d(total)/d(params of A). The prediction loss reaches A's parameters only
// through the prototype, which every A sample contributes to; the alignment
// term touches the overlap rows directly.
ParamGrads a_param_grads(const MlpModel& model, const ForwardCache& cache,
                         const SharedWork& shared, const Matrix& zb_ov,
                         const std::vector<std::int8_t>& ya,
                         const std::vector<std::uint32_t>& ov, const HyperParams& h) {
  const std::size_t m_a = cache.batch_size();
  const std::size_t k = model.output_dim();

  std::vector<double> g_phi(k, 0.0);
  for (std::size_t p = 0; p < ov.size(); ++p) {
    const double* zb = zb_ov.row_ptr(p);
    for (std::size_t c = 0; c < k; ++c) g_phi[c] += shared.pred.dscore[p] * zb[c];
  }

  Matrix upstream(m_a, k);
  for (std::size_t j = 0; j < m_a; ++j) {
    const double w = static_cast<double>(ya[j]) / static_cast<double>(m_a);
    double* row = upstream.row_ptr(j);
    for (std::size_t c = 0; c < k; ++c) row[c] = w * g_phi[c];
  }
  for (std::size_t p = 0; p < ov.size(); ++p) {
    double* row = upstream.row_ptr(ov[p]);
    const double* da = shared.align.dza.row_ptr(p);
    for (std::size_t c = 0; c < k; ++c) row[c] += h.gamma * da[c];
  }

  ParamGrads grads = backward(model, cache, upstream).grads;
  add_weight_decay(grads, model, h.lambda);
  return grads;
}

// d(total)/d(params of B): the prediction loss reaches B through the scores
// of its overlap latents, the alignment term through the same rows.
ParamGrads b_param_grads(const MlpModel& model, const ForwardCache& cache,
                         const SharedWork& shared, const std::vector<double>& phi,
                         const HyperParams& h) {
  const std::size_t m_ov = cache.batch_size();
  const std::size_t k = model.output_dim();

  Matrix upstream(m_ov, k);
  for (std::size_t p = 0; p < m_ov; ++p) {
    double* row = upstream.row_ptr(p);
    const double* db = shared.align.dzb.row_ptr(p);
    for (std::size_t c = 0; c < k; ++c)
      row[c] = shared.pred.dscore[p] * phi[c] + h.gamma * db[c];
  }

  ParamGrads grads = backward(model, cache, upstream).grads;
  add_weight_decay(grads, model, h.lambda);
  return grads;
}

void check_problem(const MlpModel& model_a, const MlpModel& model_b, const FtlProblem& p) {
  if (p.ya.size() != p.xa.rows)
    fail(ErrorCode::dimension_mismatch, "labeled party: " + std::to_string(p.ya.size()) +
                                            " labels for " + std::to_string(p.xa.rows) + " rows");
  if (p.ov_a.size() != p.ov_b.size())
    fail(ErrorCode::dimension_mismatch,
         "overlap lists disagree: " + std::to_string(p.ov_a.size()) + " vs " +
             std::to_string(p.ov_b.size()));
  check_overlap_indices(p.ov_a, p.xa.rows, "party A");
  check_overlap_indices(p.ov_b, p.xb.rows, "party B");
  check_labels(p.ya);
  if (model_a.output_dim() != model_b.output_dim())
    fail(ErrorCode::dimension_mismatch,
         "latent dims disagree: " + std::to_string(model_a.output_dim()) + " vs " +
             std::to_string(model_b.output_dim()));
  if (model_a.input_dim() != p.xa.cols || model_b.input_dim() != p.xb.cols)
    fail(ErrorCode::dimension_mismatch, "model input dims do not match the feature matrices");
}

}  // namespace

void HyperParams::validate() const {
  if (!(eta > 0)) fail(ErrorCode::config, "learning rate must be positive");
  if (gamma < 0) fail(ErrorCode::config, "alignment weight must be >= 0");
  if (lambda < 0) fail(ErrorCode::config, "regularization weight must be >= 0");
  if (max_iters < 1) fail(ErrorCode::config, "max_iters must be >= 1");
  if (tol < 0) fail(ErrorCode::config, "stop tolerance must be >= 0");
  if (warmup >= max_iters)
    fail(ErrorCode::config, "warmup (" + std::to_string(warmup) +
                                ") must be smaller than max_iters (" +
                                std::to_string(max_iters) + ")");
}

LossBreakdown evaluate_objective(const MlpModel& model_a, const MlpModel& model_b,
                                 const FtlProblem& p, const HyperParams& h) {
  h.validate();
  check_problem(model_a, model_b, p);
  const Matrix za_all = forward(model_a, p.xa);
  const Matrix za_ov = select_rows(za_all, p.ov_a);
  const std::vector<double> phi = compute_prototype({za_all, p.ya});
  const Matrix zb_ov = forward(model_b, select_rows(p.xb, p.ov_b));
  const std::vector<std::int8_t> y_ov = overlap_labels(p.ya, p.ov_a);
  const SharedWork shared = shared_losses(za_ov, zb_ov, y_ov, phi, h.alignment);
  return total_loss(shared.pred.j_b, shared.align.j_ab, regularization(model_a),
                    regularization(model_b), h.gamma, h.lambda);
}

JointGrads objective_gradients(const MlpModel& model_a, const MlpModel& model_b,
                               const FtlProblem& p, const HyperParams& h) {
  h.validate();
  check_problem(model_a, model_b, p);
  ForwardCache cache_a;
  const Matrix za_all = forward(model_a, p.xa, &cache_a);
  const Matrix za_ov = select_rows(za_all, p.ov_a);
  const std::vector<double> phi = compute_prototype({za_all, p.ya});
  ForwardCache cache_b;
  const Matrix zb_ov = forward(model_b, select_rows(p.xb, p.ov_b), &cache_b);
  const std::vector<std::int8_t> y_ov = overlap_labels(p.ya, p.ov_a);
  const SharedWork shared = shared_losses(za_ov, zb_ov, y_ov, phi, h.alignment);
  JointGrads g;
  g.a = a_param_grads(model_a, cache_a, shared, zb_ov, p.ya, p.ov_a, h);
  g.b = b_param_grads(model_b, cache_b, shared, phi, h);
  return g;
}

// ---------------------------------------------------------------------------
// PartyA

PartyA::PartyA(MlpModel model, Matrix x, std::vector<std::int8_t> y,
               std::vector<std::uint32_t> overlap, HyperParams hyper)
    : model_(std::move(model)),
      x_(std::move(x)),
      y_(std::move(y)),
      overlap_(std::move(overlap)),
      hyper_(hyper),
      prev_total_(std::numeric_limits<double>::infinity()) {
  hyper_.validate();
  if (y_.size() != x_.rows)
    fail(ErrorCode::dimension_mismatch, "party A: " + std::to_string(y_.size()) +
                                            " labels for " + std::to_string(x_.rows) + " rows");
  if (x_.rows == 0) fail(ErrorCode::insufficient_data, "party A: no samples");
  check_labels(y_);
  check_overlap_indices(overlap_, x_.rows, "party A");
  if (model_.input_dim() != x_.cols)
    fail(ErrorCode::dimension_mismatch,
         "party A: model expects " + std::to_string(model_.input_dim()) + " features, data has " +
             std::to_string(x_.cols));
}

void PartyA::expect(Phase p, const char* op) const {
  if (phase_ != p)
    fail(ErrorCode::protocol_order,
         std::string(op) + " called out of protocol order at iteration " +
             std::to_string(iteration_ + 1));
}

MsgLatentsA PartyA::make_latents() {
  expect(Phase::latents, "make_latents");
  cache_ = ForwardCache{};
  const Matrix za_all = forward(model_, x_, &cache_);
  za_ov_ = select_rows(za_all, overlap_);
  phi_ = compute_prototype({za_all, y_});

  MsgLatentsA m;
  m.z = za_ov_;
  m.labels = overlap_labels(y_, overlap_);
  m.phi = Matrix(1, phi_.size());
  for (std::size_t c = 0; c < phi_.size(); ++c) m.phi.data[c] = phi_[c];
  phase_ = Phase::await_latents_b;
  return m;
}

void PartyA::absorb_latents_b(const MsgLatentsB& m) {
  expect(Phase::await_latents_b, "absorb_latents_b");
  if (m.z.rows != overlap_.size() || m.z.cols != model_.output_dim())
    fail(ErrorCode::dimension_mismatch,
         "party A: peer latents are " + m.z.shape_str() + ", expected " +
             std::to_string(overlap_.size()) + "x" + std::to_string(model_.output_dim()));
  const SharedWork shared =
      shared_losses(za_ov_, m.z, overlap_labels(y_, overlap_), phi_, hyper_.alignment);
  grads_ = a_param_grads(model_, cache_, shared, m.z, y_, overlap_, hyper_);
  grads_ready_ = true;
  partial_ = LossBreakdown{};
  partial_.j_b = shared.pred.j_b;
  partial_.j_ab = shared.align.j_ab;
  partial_.j_a_reg = regularization(model_);
  phase_ = Phase::report;
}

MsgGradientsA PartyA::make_gradient_frame() const {
  expect(Phase::report, "make_gradient_frame");
  MsgGradientsA m;
  for (std::size_t l = 0; l < grads_.weights.size(); ++l) {
    m.parts.push_back(grads_.weights[l]);
    Matrix b(1, grads_.biases[l].size());
    b.data = grads_.biases[l];
    m.parts.push_back(std::move(b));
  }
  return m;
}

MsgLossReportA PartyA::make_loss_report() {
  expect(Phase::report, "make_loss_report");
  phase_ = Phase::await_report_b;
  return MsgLossReportA{partial_};
}

bool PartyA::absorb_loss_report_b(const MsgLossReportB& m) {
  expect(Phase::await_report_b, "absorb_loss_report_b");
  const LossBreakdown& l = m.losses;
  if (!same_bits(l.j_b, partial_.j_b) || !same_bits(l.j_ab, partial_.j_ab) ||
      !same_bits(l.j_a_reg, partial_.j_a_reg))
    fail(ErrorCode::protocol, "party A: peer loss report disagrees with locally computed terms");
  const LossBreakdown recomposed =
      total_loss(l.j_b, l.j_ab, l.j_a_reg, l.j_b_reg, hyper_.gamma, hyper_.lambda);
  if (!same_bits(recomposed.total, l.total))
    fail(ErrorCode::protocol, "party A: peer loss report total does not recompose");
  if (!std::isfinite(l.total))
    fail(ErrorCode::divergence,
         "objective became non-finite at iteration " + std::to_string(iteration_ + 1) +
             "; try a smaller learning rate");

  trace_.push_back(l);
  try {
    sgd_step(model_, grads_, hyper_.eta);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::numeric)
      fail(ErrorCode::divergence, std::string("gradients became non-finite at iteration ") +
                                      std::to_string(iteration_ + 1) +
                                      "; try a smaller learning rate");
    throw;
  }
  iteration_ += 1;
  grads_ready_ = false;
  phase_ = Phase::latents;

  const bool flat = iteration_ >= hyper_.warmup && (prev_total_ - l.total) <= hyper_.tol;
  prev_total_ = l.total;
  return iteration_ >= hyper_.max_iters || flat;
}

const ParamGrads& PartyA::gradients() const {
  if (!grads_ready_)
    fail(ErrorCode::protocol_order,
         "party A: gradients requested before this iteration's latent exchange");
  return grads_;
}

std::vector<double> PartyA::current_prototype() const {
  const Matrix za_all = forward(model_, x_);
  return compute_prototype({za_all, y_});
}

// ---------------------------------------------------------------------------
// PartyB

PartyB::PartyB(MlpModel model, Matrix x, std::vector<std::uint32_t> overlap, HyperParams hyper)
    : model_(std::move(model)), x_(std::move(x)), overlap_(std::move(overlap)), hyper_(hyper) {
  hyper_.validate();
  if (x_.rows == 0) fail(ErrorCode::insufficient_data, "party B: no samples");
  check_overlap_indices(overlap_, x_.rows, "party B");
  if (model_.input_dim() != x_.cols)
    fail(ErrorCode::dimension_mismatch,
         "party B: model expects " + std::to_string(model_.input_dim()) + " features, data has " +
             std::to_string(x_.cols));
}

namespace {
const Matrix& unlabeled_features(const EncodedDataset& ds) {
  if (ds.labeled())
    fail(ErrorCode::label,
         "party B holds unlabeled data; refusing a dataset that carries labels");
  return ds.x;
}
}  // namespace

PartyB::PartyB(MlpModel model, const EncodedDataset& ds, std::vector<std::uint32_t> overlap,
               HyperParams hyper)
    : PartyB(std::move(model), unlabeled_features(ds), std::move(overlap), hyper) {}

void PartyB::expect(Phase p, const char* op) const {
  if (phase_ != p)
    fail(ErrorCode::protocol_order,
         std::string(op) + " called out of protocol order at iteration " +
             std::to_string(iteration_ + 1));
}

void PartyB::absorb_latents_a(const MsgLatentsA& m) {
  expect(Phase::await_latents_a, "absorb_latents_a");
  const std::size_t k = model_.output_dim();
  if (m.z.rows != overlap_.size() || m.z.cols != k)
    fail(ErrorCode::dimension_mismatch,
         "party B: peer latents are " + m.z.shape_str() + ", expected " +
             std::to_string(overlap_.size()) + "x" + std::to_string(k));
  if (m.labels.size() != m.z.rows)
    fail(ErrorCode::dimension_mismatch, "party B: label count does not match peer latents");
  check_labels(m.labels);
  if (m.phi.rows != 1 || m.phi.cols != k)
    fail(ErrorCode::dimension_mismatch, "party B: prototype must be 1x" + std::to_string(k));

  const std::vector<double> phi(m.phi.data.begin(), m.phi.data.end());
  cache_ = ForwardCache{};
  zb_ov_ = forward(model_, select_rows(x_, overlap_), &cache_);
  const SharedWork shared = shared_losses(m.z, zb_ov_, m.labels, phi, hyper_.alignment);
  grads_ = b_param_grads(model_, cache_, shared, phi, hyper_);
  grads_ready_ = true;
  own_partial_ = LossBreakdown{};
  own_partial_.j_b = shared.pred.j_b;
  own_partial_.j_ab = shared.align.j_ab;
  mirror_gradients_ = false;
  phase_ = Phase::reply;
}

MsgLatentsB PartyB::make_latents() const {
  expect(Phase::reply, "make_latents");
  return MsgLatentsB{zb_ov_};
}

void PartyB::absorb_gradients_a(const MsgGradientsA&) {
  expect(Phase::reply, "absorb_gradients_a");
  // Content is intentionally ignored; remember to mirror the frame back.
  mirror_gradients_ = true;
}

void PartyB::absorb_loss_report_a(const MsgLossReportA& m) {
  expect(Phase::reply, "absorb_loss_report_a");
  if (!same_bits(m.losses.j_b, own_partial_.j_b) || !same_bits(m.losses.j_ab, own_partial_.j_ab))
    fail(ErrorCode::protocol, "party B: peer loss report disagrees with locally computed terms");
  pending_ = m.losses;
  phase_ = Phase::report;
}

MsgGradientsB PartyB::make_gradient_frame() const {
  expect(Phase::report, "make_gradient_frame");
  MsgGradientsB m;
  for (std::size_t l = 0; l < grads_.weights.size(); ++l) {
    m.parts.push_back(grads_.weights[l]);
    Matrix b(1, grads_.biases[l].size());
    b.data = grads_.biases[l];
    m.parts.push_back(std::move(b));
  }
  return m;
}

MsgLossReportB PartyB::make_loss_report() {
  expect(Phase::report, "make_loss_report");
  pending_ = total_loss(pending_.j_b, pending_.j_ab, pending_.j_a_reg, regularization(model_),
                        hyper_.gamma, hyper_.lambda);
  phase_ = Phase::finish;
  return MsgLossReportB{pending_};
}

void PartyB::finish_iteration() {
  expect(Phase::finish, "finish_iteration");
  if (!std::isfinite(pending_.total))
    fail(ErrorCode::divergence,
         "objective became non-finite at iteration " + std::to_string(iteration_ + 1) +
             "; try a smaller learning rate");
  trace_.push_back(pending_);
  try {
    sgd_step(model_, grads_, hyper_.eta);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::numeric)
      fail(ErrorCode::divergence, std::string("gradients became non-finite at iteration ") +
                                      std::to_string(iteration_ + 1) +
                                      "; try a smaller learning rate");
    throw;
  }
  iteration_ += 1;
  grads_ready_ = false;
  phase_ = Phase::await_latents_a;
}

void PartyB::absorb_stop() {
  expect(Phase::await_latents_a, "absorb_stop");
  phase_ = Phase::done;
}

const ParamGrads& PartyB::gradients() const {
  if (!grads_ready_)
    fail(ErrorCode::protocol_order,
         "party B: gradients requested before this iteration's latent exchange");
  return grads_;
}

Matrix PartyB::project(const Matrix& xb) const {
  if (xb.cols != model_.input_dim())
    fail(ErrorCode::dimension_mismatch,
         "party B: model expects " + std::to_string(model_.input_dim()) + " features, batch has " +
             std::to_string(xb.cols));
  return forward(model_, xb);
}

}  // namespace fedxfer
