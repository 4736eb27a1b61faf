#pragma once

#include <stdexcept>
#include <string>

namespace fedxfer {

enum class ErrorCode {
  dimension_mismatch,
  config,
  label,
  insufficient_data,
  protocol,             // bad frame: wrong magic, unknown kind, unexpected message
  framing,              // truncated frame or length field inconsistent with buffer
  frame_size,           // payload exceeds the 2^31-byte frame limit
  protocol_order,       // party operation invoked out of phase
  transport_timeout,
  transport_reset,      // peer closed or connection reset
  transport_handshake,  // connection-setup magic mismatch
  divergence,           // training produced a non-finite objective
  numeric,
  evaluation,
  load,
  encode,
  split,
  harness,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace fedxfer
