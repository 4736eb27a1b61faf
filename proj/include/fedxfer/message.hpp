#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "fedxfer/losses.hpp"
#include "fedxfer/matrix.hpp"

namespace fedxfer {

// Latents of party A over the overlap set, the overlap labels, and the
// prototype (as a 1 x k matrix). Everything B needs to score and align.
struct MsgLatentsA {
  Matrix z;
  std::vector<std::int8_t> labels;
  Matrix phi;

  bool operator==(const MsgLatentsA&) const = default;
};

struct MsgLatentsB {
  Matrix z;

  bool operator==(const MsgLatentsB&) const = default;
};

struct MsgLossReportA {
  LossBreakdown losses;  // j_b_reg and total are zero; B fills them in

  bool operator==(const MsgLossReportA&) const = default;
};

struct MsgLossReportB {
  LossBreakdown losses;

  bool operator==(const MsgLossReportB&) const = default;
};

// Raw parameter gradients, one matrix per weight/bias block. Sent only in
// faithful-exchange mode; the receiver ignores the content.
struct MsgGradientsA {
  std::vector<Matrix> parts;

  bool operator==(const MsgGradientsA&) const = default;
};

struct MsgGradientsB {
  std::vector<Matrix> parts;

  bool operator==(const MsgGradientsB&) const = default;
};

struct MsgStop {
  bool operator==(const MsgStop&) const = default;
};

struct MsgPredictRequest {
  Matrix z;

  bool operator==(const MsgPredictRequest&) const = default;
};

struct MsgPredictResponse {
  Matrix scores;  // n x 1

  bool operator==(const MsgPredictResponse&) const = default;
};

using FtlMessage = std::variant<MsgLatentsA, MsgLatentsB, MsgLossReportA, MsgLossReportB,
                                MsgGradientsA, MsgGradientsB, MsgStop, MsgPredictRequest,
                                MsgPredictResponse>;

enum class MessageKind : std::uint8_t {
  latents_a = 0x01,
  latents_b = 0x02,
  loss_report_a = 0x03,
  loss_report_b = 0x04,
  gradients_a = 0x05,
  gradients_b = 0x06,
  stop = 0x07,
  predict_request = 0x08,
  predict_response = 0x09,
};

MessageKind kind_of(const FtlMessage& m);

/// Frame layout: magic "FTL1" | kind (1 byte) | payload length (u32 LE) |
/// payload. Matrices are rows u32-LE, cols u32-LE, then row-major f64-LE.
/// Label vectors are length u32-LE then signed bytes. Loss reports are five
/// f64-LE in field order.
std::vector<std::uint8_t> encode_message(const FtlMessage& m);

/// Inverse of encode_message. Consumes exactly one frame starting at
/// bytes[offset]; advances offset past it.
FtlMessage decode_message(const std::vector<std::uint8_t>& bytes, std::size_t& offset);
FtlMessage decode_message(const std::vector<std::uint8_t>& bytes);

}  // namespace fedxfer
