#include "fedxfer/protocol.hpp"

#include <exception>
#include <string>
#include <thread>
#include <utility>

#include "fedxfer/error.hpp"

namespace fedxfer {
namespace {

[[noreturn]] void rethrow_with_iteration(const Error& e, std::uint32_t iteration) {
  switch (e.code()) {
    case ErrorCode::transport_timeout:
    case ErrorCode::transport_reset:
    case ErrorCode::transport_handshake:
      fail(e.code(), "iteration " + std::to_string(iteration) + ": " + e.what());
    default:
      throw e;
  }
}

template <typename T>
const T& expect_kind(const FtlMessage& m, const char* who) {
  if (const T* p = std::get_if<T>(&m)) return *p;
  fail(ErrorCode::protocol_order,
       std::string(who) + ": unexpected message kind " +
           std::to_string(static_cast<int>(kind_of(m))));
}

bool is_divergence(const std::exception_ptr& p) {
  if (!p) return false;
  try {
    std::rethrow_exception(p);
  } catch (const Error& e) {
    return e.code() == ErrorCode::divergence;
  } catch (...) {
    return false;
  }
}

// A timeout on one side is usually the echo of a real failure on the other;
// surface the divergence when there is one.
[[noreturn]] void rethrow_preferring_divergence(const std::exception_ptr& first,
                                                const std::exception_ptr& second) {
  if (is_divergence(first)) std::rethrow_exception(first);
  if (is_divergence(second)) std::rethrow_exception(second);
  std::rethrow_exception(first ? first : second);
}

}  // namespace

std::vector<LossBreakdown> run_party_a(PartyA& party, Channel& channel, bool faithful_exchange) {
  for (;;) {
    const std::uint32_t iteration = party.iteration() + 1;
    try {
      channel.send(party.make_latents());
      const FtlMessage reply = channel.recv();
      party.absorb_latents_b(expect_kind<MsgLatentsB>(reply, "party A"));
      if (faithful_exchange) channel.send(party.make_gradient_frame());
      channel.send(party.make_loss_report());
      FtlMessage report = channel.recv();
      if (faithful_exchange) {
        expect_kind<MsgGradientsB>(report, "party A");  // content deliberately unused
        report = channel.recv();
      }
      const bool stop = party.absorb_loss_report_b(expect_kind<MsgLossReportB>(report, "party A"));
      if (stop) {
        channel.send(MsgStop{});
        break;
      }
    } catch (const Error& e) {
      rethrow_with_iteration(e, iteration);
    }
  }
  return party.trace();
}

std::vector<LossBreakdown> run_party_b(PartyB& party, Channel& channel) {
  for (;;) {
    const std::uint32_t iteration =
        static_cast<std::uint32_t>(party.trace().size()) + 1;
    try {
      const FtlMessage first = channel.recv();
      if (std::holds_alternative<MsgStop>(first)) {
        party.absorb_stop();
        break;
      }
      party.absorb_latents_a(expect_kind<MsgLatentsA>(first, "party B"));
      channel.send(party.make_latents());
      FtlMessage report = channel.recv();
      if (const MsgGradientsA* g = std::get_if<MsgGradientsA>(&report)) {
        party.absorb_gradients_a(*g);
        report = channel.recv();
      }
      party.absorb_loss_report_a(expect_kind<MsgLossReportA>(report, "party B"));
      if (party.mirror_gradients()) channel.send(party.make_gradient_frame());
      channel.send(party.make_loss_report());
      party.finish_iteration();
    } catch (const Error& e) {
      rethrow_with_iteration(e, iteration);
    }
  }
  return party.trace();
}

TrainResult train_ftl(PartyA& party_a, PartyB& party_b, bool faithful_exchange) {
  auto [chan_a, chan_b] = make_channel_pair();

  std::exception_ptr b_error;
  std::thread b_thread([&] {
    try {
      run_party_b(party_b, *chan_b);
    } catch (...) {
      b_error = std::current_exception();
    }
  });

  std::exception_ptr a_error;
  try {
    run_party_a(party_a, *chan_a, faithful_exchange);
  } catch (...) {
    a_error = std::current_exception();
  }
  b_thread.join();
  if (a_error || b_error) rethrow_preferring_divergence(a_error, b_error);

  return TrainResult{party_a.trace()};
}

void serve_predictions_a(const PartyA& party, Channel& channel) {
  const std::vector<double> phi = party.current_prototype();
  for (;;) {
    const FtlMessage m = channel.recv();
    if (std::holds_alternative<MsgStop>(m)) break;
    const MsgPredictRequest& req = expect_kind<MsgPredictRequest>(m, "party A");
    const std::vector<double> scores = prediction_score(phi, req.z);
    Matrix out(scores.size(), 1);
    out.data = scores;
    channel.send(MsgPredictResponse{std::move(out)});
  }
}

Predictions request_predictions_b(const PartyB& party, Channel& channel, const Matrix& xb) {
  channel.send(MsgPredictRequest{party.project(xb)});
  const FtlMessage m = channel.recv();
  const MsgPredictResponse& resp = expect_kind<MsgPredictResponse>(m, "party B");
  if (resp.scores.rows != xb.rows || resp.scores.cols != 1)
    fail(ErrorCode::dimension_mismatch,
         "party B: prediction response is " + resp.scores.shape_str() + ", expected " +
             std::to_string(xb.rows) + "x1");
  Predictions p;
  p.scores = resp.scores.data;
  p.labels.resize(p.scores.size());
  for (std::size_t i = 0; i < p.scores.size(); ++i) p.labels[i] = p.scores[i] >= 0.0 ? 1 : -1;
  return p;
}

void send_prediction_stop(Channel& channel) { channel.send(MsgStop{}); }

Predictions predict_ftl(const PartyA& party_a, const PartyB& party_b, const Matrix& xb) {
  auto [chan_a, chan_b] = make_channel_pair();

  std::exception_ptr a_error;
  std::thread a_thread([&] {
    try {
      serve_predictions_a(party_a, *chan_a);
    } catch (...) {
      a_error = std::current_exception();
    }
  });

  Predictions p;
  std::exception_ptr b_error;
  try {
    p = request_predictions_b(party_b, *chan_b, xb);
    send_prediction_stop(*chan_b);
  } catch (...) {
    b_error = std::current_exception();
    try {
      send_prediction_stop(*chan_b);  // unblock the serving thread
    } catch (...) {
    }
  }
  a_thread.join();
  if (a_error || b_error) rethrow_preferring_divergence(b_error, a_error);
  return p;
}

}  // namespace fedxfer
