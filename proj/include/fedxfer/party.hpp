#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedxfer/dataset.hpp"
#include "fedxfer/losses.hpp"
#include "fedxfer/matrix.hpp"
#include "fedxfer/message.hpp"
#include "fedxfer/mlp.hpp"

namespace fedxfer {

struct HyperParams {
  // Losses and gradients are batch sums, so usable learning rates shrink with
  // the overlap size; 1e-3 converges across the shipped presets at CASE-scale
  // splits. The warmup shields the stop test from the oscillation phase a
  // fresh extractor pair goes through before settling into steady descent.
  double eta = 0.001;      // learning rate
  double gamma = 1.0;      // alignment weight
  double lambda = 0.001;   // regularization weight
  std::uint32_t max_iters = 200;
  double tol = 1e-6;       // stop when the per-iteration improvement drops to this
  std::uint32_t warmup = 100;  // iterations before the stop test arms
  AlignmentKind alignment = AlignmentKind::squared_distance;

  void validate() const;
};

/// Everything the joint objective depends on, gathered so the loss and its
/// gradients can be evaluated as pure functions (the finite-difference oracle
/// drives exactly these entry points).
struct FtlProblem {
  Matrix xa;
  std::vector<std::int8_t> ya;       // one per row of xa, in {-1,+1}
  Matrix xb;
  std::vector<std::uint32_t> ov_a;   // overlap positions into xa's rows
  std::vector<std::uint32_t> ov_b;   // overlap positions into xb's rows, same logical order
};

LossBreakdown evaluate_objective(const MlpModel& model_a, const MlpModel& model_b,
                                 const FtlProblem& p, const HyperParams& h);

struct JointGrads {
  ParamGrads a;
  ParamGrads b;
};

JointGrads objective_gradients(const MlpModel& model_a, const MlpModel& model_b,
                               const FtlProblem& p, const HyperParams& h);

/// One training round as seen by the labeled party. Methods must be called in
/// protocol order (make_latents, absorb_latents_b, make_loss_report,
/// absorb_loss_report_b); anything else is a protocol-order error.
class PartyA {
 public:
  PartyA(MlpModel model, Matrix x, std::vector<std::int8_t> y,
         std::vector<std::uint32_t> overlap, HyperParams hyper);

  MsgLatentsA make_latents();
  void absorb_latents_b(const MsgLatentsB& m);
  MsgGradientsA make_gradient_frame() const;
  MsgLossReportA make_loss_report();

  /// Takes B's full report as the canonical row for this iteration, applies
  /// the SGD step, and returns whether the stop rule fires.
  bool absorb_loss_report_b(const MsgLossReportB& m);

  const ParamGrads& gradients() const;
  const MlpModel& model() const { return model_; }
  const std::vector<LossBreakdown>& trace() const { return trace_; }
  std::uint32_t iteration() const { return iteration_; }

  /// Prototype from the current model over all of A's samples (Algorithm 2's
  /// scoring state). Valid any time.
  std::vector<double> current_prototype() const;

 private:
  enum class Phase { latents, await_latents_b, report, await_report_b };

  void expect(Phase p, const char* op) const;

  MlpModel model_;
  Matrix x_;
  std::vector<std::int8_t> y_;
  std::vector<std::uint32_t> overlap_;
  HyperParams hyper_;

  Phase phase_ = Phase::latents;
  std::uint32_t iteration_ = 0;  // completed iterations
  double prev_total_;

  // per-iteration scratch
  ForwardCache cache_;
  Matrix za_ov_;
  std::vector<double> phi_;
  ParamGrads grads_;
  bool grads_ready_ = false;
  LossBreakdown partial_;  // j_b, j_ab, j_a_reg filled; rest zero

  std::vector<LossBreakdown> trace_;
};

/// The unlabeled party's state machine: absorb_latents_a, make_latents,
/// absorb_loss_report_a, make_loss_report (which also applies the SGD step).
class PartyB {
 public:
  PartyB(MlpModel model, Matrix x, std::vector<std::uint32_t> overlap, HyperParams hyper);

  /// Rejects labeled datasets: the unlabeled party must never hold labels.
  PartyB(MlpModel model, const EncodedDataset& ds, std::vector<std::uint32_t> overlap,
         HyperParams hyper);

  void absorb_latents_a(const MsgLatentsA& m);
  MsgLatentsB make_latents() const;
  void absorb_gradients_a(const MsgGradientsA& m);
  void absorb_loss_report_a(const MsgLossReportA& m);
  MsgGradientsB make_gradient_frame() const;

  /// Composes the completed report. The caller sends it, then calls
  /// finish_iteration so the peer learns the loss even when it is divergent.
  MsgLossReportB make_loss_report();

  /// Divergence check, trace append, and the SGD step for this iteration.
  void finish_iteration();

  void absorb_stop();

  const ParamGrads& gradients() const;
  const MlpModel& model() const { return model_; }
  const std::vector<LossBreakdown>& trace() const { return trace_; }
  bool mirror_gradients() const { return mirror_gradients_; }

  /// Latents for an arbitrary feature batch (prediction path).
  Matrix project(const Matrix& xb) const;

 private:
  enum class Phase { await_latents_a, reply, report, finish, done };

  void expect(Phase p, const char* op) const;

  MlpModel model_;
  Matrix x_;
  std::vector<std::uint32_t> overlap_;
  HyperParams hyper_;

  Phase phase_ = Phase::await_latents_a;
  std::uint32_t iteration_ = 0;

  ForwardCache cache_;
  Matrix zb_ov_;
  ParamGrads grads_;
  bool grads_ready_ = false;
  bool mirror_gradients_ = false;
  LossBreakdown pending_;
  LossBreakdown own_partial_;  // what B recomputed; must match A's report exactly

  std::vector<LossBreakdown> trace_;
};

}  // namespace fedxfer
