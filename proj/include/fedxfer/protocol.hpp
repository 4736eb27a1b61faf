#pragma once

#include <cstdint>
#include <vector>

#include "fedxfer/channel.hpp"
#include "fedxfer/party.hpp"

namespace fedxfer {

/// Drives the labeled party through every training round. A initiates each
/// iteration, decides the stop rule, and emits the stop frame at the end.
/// faithful_exchange additionally ships A's raw parameter gradients; B then
/// mirrors its own back. Returns the loss trace, one row per iteration.
std::vector<LossBreakdown> run_party_a(PartyA& party, Channel& channel, bool faithful_exchange);

/// Drives the unlabeled party: reacts to A's frames until the stop frame.
std::vector<LossBreakdown> run_party_b(PartyB& party, Channel& channel);

struct TrainResult {
  std::vector<LossBreakdown> trace;  // identical on both sides
};

/// Single-process training: runs B on a helper thread over an in-process
/// channel pair and A on the calling thread.
TrainResult train_ftl(PartyA& party_a, PartyB& party_b, bool faithful_exchange = false);

struct Predictions {
  std::vector<double> scores;
  std::vector<std::int8_t> labels;  // score >= 0 maps to +1
};

/// A-side serving loop for the prediction phase: answers score requests until
/// the peer sends the stop frame.
void serve_predictions_a(const PartyA& party, Channel& channel);

/// B-side single prediction round trip for a feature batch. Does not send the
/// stop frame; call send_prediction_stop when done asking.
Predictions request_predictions_b(const PartyB& party, Channel& channel, const Matrix& xb);
void send_prediction_stop(Channel& channel);

/// Single-process prediction for a feature batch of party B.
Predictions predict_ftl(const PartyA& party_a, const PartyB& party_b, const Matrix& xb);

}  // namespace fedxfer
