#include "fedxfer/message.hpp"

#include <cstring>
#include <string>

#include "fedxfer/error.hpp"

namespace fedxfer {
namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'T', 'L', '1'};
constexpr std::uint64_t kMaxPayload = 1ull << 31;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

std::uint64_t matrix_size(const Matrix& m) { return 8ull + 8ull * m.rows * m.cols; }

void put_matrix(std::vector<std::uint8_t>& out, const Matrix& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows));
  put_u32(out, static_cast<std::uint32_t>(m.cols));
  for (double d : m.data) put_f64(out, d);
}

std::uint64_t labels_size(const std::vector<std::int8_t>& v) { return 4ull + v.size(); }

void put_labels(std::vector<std::uint8_t>& out, const std::vector<std::int8_t>& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (std::int8_t l : v) out.push_back(static_cast<std::uint8_t>(l));
}

void put_losses(std::vector<std::uint8_t>& out, const LossBreakdown& l) {
  put_f64(out, l.j_b);
  put_f64(out, l.j_ab);
  put_f64(out, l.j_a_reg);
  put_f64(out, l.j_b_reg);
  put_f64(out, l.total);
}

std::uint64_t payload_size(const FtlMessage& m) {
  struct Sizer {
    std::uint64_t operator()(const MsgLatentsA& x) const {
      return matrix_size(x.z) + labels_size(x.labels) + matrix_size(x.phi);
    }
    std::uint64_t operator()(const MsgLatentsB& x) const { return matrix_size(x.z); }
    std::uint64_t operator()(const MsgLossReportA&) const { return 40; }
    std::uint64_t operator()(const MsgLossReportB&) const { return 40; }
    std::uint64_t operator()(const MsgGradientsA& x) const {
      std::uint64_t s = 4;
      for (const Matrix& p : x.parts) s += matrix_size(p);
      return s;
    }
    std::uint64_t operator()(const MsgGradientsB& x) const {
      std::uint64_t s = 4;
      for (const Matrix& p : x.parts) s += matrix_size(p);
      return s;
    }
    std::uint64_t operator()(const MsgStop&) const { return 0; }
    std::uint64_t operator()(const MsgPredictRequest& x) const { return matrix_size(x.z); }
    std::uint64_t operator()(const MsgPredictResponse& x) const { return matrix_size(x.scores); }
  };
  return std::visit(Sizer{}, m);
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t begin, std::size_t end)
      : bytes_(bytes), pos_(begin), end_(end) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }

  Matrix matrix() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
    need(8 * n);
    Matrix m(rows, cols);
    for (std::uint64_t i = 0; i < n; ++i) m.data[i] = f64();
    return m;
  }

  std::vector<std::int8_t> labels() {
    const std::uint32_t n = u32();
    need(n);
    std::vector<std::int8_t> v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = static_cast<std::int8_t>(bytes_[pos_ + i]);
    pos_ += n;
    return v;
  }

  LossBreakdown losses() {
    LossBreakdown l;
    l.j_b = f64();
    l.j_ab = f64();
    l.j_a_reg = f64();
    l.j_b_reg = f64();
    l.total = f64();
    return l;
  }

  bool exhausted() const { return pos_ == end_; }

 private:
  void need(std::uint64_t n) {
    if (pos_ + n > end_)
      fail(ErrorCode::framing, "truncated payload: need " + std::to_string(n) + " bytes at offset " +
                                   std::to_string(pos_) + ", payload ends at " + std::to_string(end_));
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_;
  std::size_t end_;
};

}  // namespace

MessageKind kind_of(const FtlMessage& m) {
  struct Kinder {
    MessageKind operator()(const MsgLatentsA&) const { return MessageKind::latents_a; }
    MessageKind operator()(const MsgLatentsB&) const { return MessageKind::latents_b; }
    MessageKind operator()(const MsgLossReportA&) const { return MessageKind::loss_report_a; }
    MessageKind operator()(const MsgLossReportB&) const { return MessageKind::loss_report_b; }
    MessageKind operator()(const MsgGradientsA&) const { return MessageKind::gradients_a; }
    MessageKind operator()(const MsgGradientsB&) const { return MessageKind::gradients_b; }
    MessageKind operator()(const MsgStop&) const { return MessageKind::stop; }
    MessageKind operator()(const MsgPredictRequest&) const { return MessageKind::predict_request; }
    MessageKind operator()(const MsgPredictResponse&) const { return MessageKind::predict_response; }
  };
  return std::visit(Kinder{}, m);
}

std::vector<std::uint8_t> encode_message(const FtlMessage& m) {
  const std::uint64_t size = payload_size(m);
  if (size > kMaxPayload)
    fail(ErrorCode::frame_size,
         "payload of " + std::to_string(size) + " bytes exceeds the 2^31 frame limit");

  std::vector<std::uint8_t> out;
  out.reserve(9 + size);
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(static_cast<std::uint8_t>(kind_of(m)));
  put_u32(out, static_cast<std::uint32_t>(size));

  struct Writer {
    std::vector<std::uint8_t>& out;
    void operator()(const MsgLatentsA& x) const {
      put_matrix(out, x.z);
      put_labels(out, x.labels);
      put_matrix(out, x.phi);
    }
    void operator()(const MsgLatentsB& x) const { put_matrix(out, x.z); }
    void operator()(const MsgLossReportA& x) const { put_losses(out, x.losses); }
    void operator()(const MsgLossReportB& x) const { put_losses(out, x.losses); }
    void operator()(const MsgGradientsA& x) const {
      put_u32(out, static_cast<std::uint32_t>(x.parts.size()));
      for (const Matrix& p : x.parts) put_matrix(out, p);
    }
    void operator()(const MsgGradientsB& x) const {
      put_u32(out, static_cast<std::uint32_t>(x.parts.size()));
      for (const Matrix& p : x.parts) put_matrix(out, p);
    }
    void operator()(const MsgStop&) const {}
    void operator()(const MsgPredictRequest& x) const { put_matrix(out, x.z); }
    void operator()(const MsgPredictResponse& x) const { put_matrix(out, x.scores); }
  };
  std::visit(Writer{out}, m);
  return out;
}

FtlMessage decode_message(const std::vector<std::uint8_t>& bytes, std::size_t& offset) {
  if (offset + 9 > bytes.size())
    fail(ErrorCode::framing, "frame header needs 9 bytes, only " +
                                 std::to_string(bytes.size() - offset) + " available");
  if (std::memcmp(bytes.data() + offset, kMagic, 4) != 0)
    fail(ErrorCode::protocol, "bad frame magic, expected FTL1");
  const std::uint8_t kind = bytes[offset + 4];
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[offset + 5 + i]) << (8 * i);
  const std::size_t begin = offset + 9;
  if (begin + len > bytes.size())
    fail(ErrorCode::framing, "declared payload of " + std::to_string(len) + " bytes, only " +
                                 std::to_string(bytes.size() - begin) + " available");
  Reader r(bytes, begin, begin + len);

  FtlMessage m;
  switch (static_cast<MessageKind>(kind)) {
    case MessageKind::latents_a: {
      MsgLatentsA x;
      x.z = r.matrix();
      x.labels = r.labels();
      x.phi = r.matrix();
      m = std::move(x);
      break;
    }
    case MessageKind::latents_b:
      m = MsgLatentsB{r.matrix()};
      break;
    case MessageKind::loss_report_a:
      m = MsgLossReportA{r.losses()};
      break;
    case MessageKind::loss_report_b:
      m = MsgLossReportB{r.losses()};
      break;
    case MessageKind::gradients_a: {
      MsgGradientsA x;
      const std::uint32_t n = r.u32();
      x.parts.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) x.parts.push_back(r.matrix());
      m = std::move(x);
      break;
    }
    case MessageKind::gradients_b: {
      MsgGradientsB x;
      const std::uint32_t n = r.u32();
      x.parts.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) x.parts.push_back(r.matrix());
      m = std::move(x);
      break;
    }
    case MessageKind::stop:
      m = MsgStop{};
      break;
    case MessageKind::predict_request:
      m = MsgPredictRequest{r.matrix()};
      break;
    case MessageKind::predict_response:
      m = MsgPredictResponse{r.matrix()};
      break;
    default:
      fail(ErrorCode::protocol, "unknown message kind byte " + std::to_string(kind));
  }
  if (!r.exhausted())
    fail(ErrorCode::framing, "payload longer than its message content");
  offset = begin + len;
  return m;
}

FtlMessage decode_message(const std::vector<std::uint8_t>& bytes) {
  std::size_t offset = 0;
  FtlMessage m = decode_message(bytes, offset);
  if (offset != bytes.size())
    fail(ErrorCode::framing, "trailing bytes after a complete frame");
  return m;
}

}  // namespace fedxfer
