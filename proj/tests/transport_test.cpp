#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <functional>
#include <future>
#include <string>
#include <vector>

#include "fedxfer/channel.hpp"
#include "fedxfer/error.hpp"
#include "fedxfer/message.hpp"
#include "fedxfer/mlp.hpp"
#include "fedxfer/party.hpp"
#include "fedxfer/protocol.hpp"
#include "fedxfer/rng.hpp"
#include "test_util.hpp"

using namespace fedxfer;
using testutil::random_matrix;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::harness;
}

std::vector<std::uint8_t> golden_latents_b_frame() {
  std::vector<std::uint8_t> f = {0x46, 0x54, 0x4C, 0x31,         // "FTL1"
                                 0x02,                           // latents_b
                                 0x18, 0x00, 0x00, 0x00,         // payload length 24
                                 0x01, 0x00, 0x00, 0x00,         // rows 1
                                 0x02, 0x00, 0x00, 0x00};        // cols 2
  const std::uint8_t one[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};    // 1.0
  const std::uint8_t two[8] = {0, 0, 0, 0, 0, 0, 0x00, 0x40};    // 2.0
  f.insert(f.end(), one, one + 8);
  f.insert(f.end(), two, two + 8);
  return f;
}

FtlMessage random_message(Rng& rng) {
  const auto mat = [&](std::size_t r, std::size_t c) { return random_matrix(r, c, rng, 10.0); };
  const auto dim = [&] { return static_cast<std::size_t>(rng.below(5)); };
  LossBreakdown l;
  l.j_b = rng.uniform(-5.0, 5.0);
  l.j_ab = rng.uniform(-5.0, 5.0);
  l.j_a_reg = rng.uniform(0.0, 5.0);
  l.j_b_reg = rng.uniform(0.0, 5.0);
  l.total = rng.uniform(-5.0, 20.0);
  switch (rng.below(9)) {
    case 0: {
      MsgLatentsA m;
      const std::size_t r = dim();
      const std::size_t k = dim();
      m.z = mat(r, k);
      m.labels.resize(r);
      for (auto& y : m.labels) y = rng.below(2) == 0 ? -1 : 1;
      m.phi = mat(1, k);
      return m;
    }
    case 1:
      return MsgLatentsB{mat(dim(), dim())};
    case 2:
      return MsgLossReportA{l};
    case 3:
      return MsgLossReportB{l};
    case 4: {
      MsgGradientsA m;
      for (std::uint64_t i = 0, n = rng.below(4); i < n; ++i) m.parts.push_back(mat(dim(), dim()));
      return m;
    }
    case 5: {
      MsgGradientsB m;
      for (std::uint64_t i = 0, n = rng.below(4); i < n; ++i) m.parts.push_back(mat(dim(), dim()));
      return m;
    }
    case 6:
      return MsgStop{};
    case 7:
      return MsgPredictRequest{mat(dim(), dim())};
    default:
      return MsgPredictResponse{mat(dim(), 1)};
  }
}

// Small two-party problem shared by the transport-equivalence cases.
struct Setup {
  Matrix xa = Matrix(4, 3);
  std::vector<std::int8_t> ya = {1, -1, 1, -1};
  Matrix xb = Matrix(4, 2);
  std::vector<std::uint32_t> ov = {0, 1, 2, 3};
  MlpModel model_a;
  MlpModel model_b;
  HyperParams hyper;

  Setup() {
    Rng rng(1701);
    xa = random_matrix(4, 3, rng);
    xb = random_matrix(4, 2, rng);
    model_a = init_model({3, 4, 2}, Activation::tanh_act, derive_seed(1701, "model-a"));
    model_b = init_model({2, 3, 2}, Activation::tanh_act, derive_seed(1701, "model-b"));
    hyper.max_iters = 6;
    hyper.warmup = 2;
  }

  PartyA party_a() const { return PartyA(model_a, xa, ya, ov, hyper); }
  PartyB party_b() const { return PartyB(model_b, xb, ov, hyper); }
};

int raw_client(std::uint16_t port, const char junk[4]) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(::send(fd, junk, 4, 0) == 4);
  return fd;
}

}  // namespace

TEST_CASE("golden latents frame encodes and decodes byte for byte") {
  const std::vector<std::uint8_t> golden = golden_latents_b_frame();
  REQUIRE(golden.size() == 33);

  const MsgLatentsB msg{Matrix::from_rows({{1.0, 2.0}})};
  CHECK(encode_message(msg) == golden);

  const FtlMessage decoded = decode_message(golden);
  REQUIRE(std::holds_alternative<MsgLatentsB>(decoded));
  CHECK(std::get<MsgLatentsB>(decoded) == msg);
}

TEST_CASE("stop frame is the nine-byte header alone") {
  const std::vector<std::uint8_t> want = {0x46, 0x54, 0x4C, 0x31, 0x07, 0x00, 0x00, 0x00, 0x00};
  CHECK(encode_message(MsgStop{}) == want);
  CHECK(std::holds_alternative<MsgStop>(decode_message(want)));
}

TEST_CASE("label bytes keep their sign on the wire") {
  MsgLatentsA m;
  m.z = Matrix::from_rows({{0.0}});
  m.labels = {-1};
  m.phi = Matrix::from_rows({{0.0}});
  const std::vector<std::uint8_t> bytes = encode_message(m);
  // header 9 | z 8+8 | label count 4 | label byte.
  REQUIRE(bytes.size() == 9 + 16 + 5 + 16);
  CHECK(bytes[9 + 16 + 4] == 0xFF);
  const FtlMessage decoded = decode_message(bytes);
  CHECK(std::get<MsgLatentsA>(decoded).labels == std::vector<std::int8_t>{-1});
}

TEST_CASE("random messages survive the wire round trip") {
  Rng rng(404);
  int seen[9] = {};
  for (int i = 0; i < 1200; ++i) {
    const FtlMessage m = random_message(rng);
    seen[static_cast<int>(kind_of(m)) - 1] += 1;
    const std::vector<std::uint8_t> bytes = encode_message(m);
    CHECK(decode_message(bytes) == m);
  }
  for (int k = 0; k < 9; ++k) CHECK(seen[k] > 0);
}

TEST_CASE("concatenated frames decode in sequence") {
  Rng rng(405);
  std::vector<FtlMessage> sent;
  std::vector<std::uint8_t> stream;
  for (int i = 0; i < 25; ++i) {
    sent.push_back(random_message(rng));
    const std::vector<std::uint8_t> bytes = encode_message(sent.back());
    stream.insert(stream.end(), bytes.begin(), bytes.end());
  }
  std::size_t offset = 0;
  for (const FtlMessage& m : sent) {
    CHECK(decode_message(stream, offset) == m);
  }
  CHECK(offset == stream.size());
}

TEST_CASE("malformed frames are rejected with distinct codes") {
  const std::vector<std::uint8_t> golden = golden_latents_b_frame();

  std::vector<std::uint8_t> bad_magic = golden;
  bad_magic[0] = 'X';
  CHECK(code_of([&] { decode_message(bad_magic); }) == ErrorCode::protocol);

  std::vector<std::uint8_t> unknown_kind = {0x46, 0x54, 0x4C, 0x31, 0x7F, 0x00, 0x00, 0x00, 0x00};
  CHECK(code_of([&] { decode_message(unknown_kind); }) == ErrorCode::protocol);

  std::vector<std::uint8_t> short_header(golden.begin(), golden.begin() + 8);
  CHECK(code_of([&] { decode_message(short_header); }) == ErrorCode::framing);

  std::vector<std::uint8_t> truncated = golden;
  truncated.pop_back();
  CHECK(code_of([&] { decode_message(truncated); }) == ErrorCode::framing);

  std::vector<std::uint8_t> trailing = golden;
  trailing.push_back(0x00);
  CHECK(code_of([&] { decode_message(trailing); }) == ErrorCode::framing);

  // Length field larger than the buffer.
  std::vector<std::uint8_t> overlong = golden;
  overlong[5] = 0x19;
  CHECK(code_of([&] { decode_message(overlong); }) == ErrorCode::framing);

  // Length field larger than the message content, padded so the buffer is big
  // enough: the decoder must notice the unconsumed payload byte.
  std::vector<std::uint8_t> padded = golden;
  padded[5] = 0x19;
  padded.push_back(0x00);
  CHECK(code_of([&] { decode_message(padded); }) == ErrorCode::framing);

  // Payload that runs out mid-matrix.
  std::vector<std::uint8_t> short_payload = golden;
  short_payload[5] = 0x10;
  short_payload.resize(9 + 0x10);
  CHECK(code_of([&] { decode_message(short_payload); }) == ErrorCode::framing);
}

TEST_CASE("payloads beyond the frame limit are refused before encoding") {
  Matrix huge(0, 0);
  huge.rows = std::size_t{1} << 28;
  huge.cols = 1;
  CHECK(code_of([&] { encode_message(MsgPredictRequest{huge}); }) == ErrorCode::frame_size);
}

TEST_CASE("in-process channel delivers in order and times out when idle") {
  auto [a, b] = make_channel_pair();

  a->send(MsgLatentsB{Matrix::from_rows({{1.0}})});
  a->send(MsgStop{});
  a->send(MsgLatentsB{Matrix::from_rows({{2.0}})});
  CHECK(std::get<MsgLatentsB>(b->recv()).z.at(0, 0) == 1.0);
  CHECK(std::holds_alternative<MsgStop>(b->recv()));
  CHECK(std::get<MsgLatentsB>(b->recv()).z.at(0, 0) == 2.0);

  // Full duplex: the reverse direction is independent.
  b->send(MsgStop{});
  CHECK(std::holds_alternative<MsgStop>(a->recv()));

  b->set_recv_timeout(std::chrono::milliseconds(1));
  const auto start = std::chrono::steady_clock::now();
  CHECK(code_of([&] { b->recv(); }) == ErrorCode::transport_timeout);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
}

TEST_CASE("tcp run matches the in-process run bit for bit") {
  const Setup s;

  PartyA a_mem = s.party_a();
  PartyB b_mem = s.party_b();
  const TrainResult mem = train_ftl(a_mem, b_mem);
  const Predictions p_mem = predict_ftl(a_mem, b_mem, s.xb);

  PartyA a_tcp = s.party_a();
  PartyB b_tcp = s.party_b();
  TcpListener listener("127.0.0.1", 0);
  REQUIRE(listener.port() != 0);

  auto server = std::async(std::launch::async, [&] {
    auto ch = listener.accept(std::chrono::milliseconds(10000));
    run_party_a(a_tcp, *ch, false);
    serve_predictions_a(a_tcp, *ch);
  });
  auto ch = tcp_dial("127.0.0.1", listener.port(), std::chrono::milliseconds(10000));
  const std::vector<LossBreakdown> trace_b = run_party_b(b_tcp, *ch);
  const Predictions p_tcp = request_predictions_b(b_tcp, *ch, s.xb);
  send_prediction_stop(*ch);
  server.get();

  CHECK(trace_b == mem.trace);
  CHECK(a_tcp.trace() == mem.trace);
  CHECK(model_to_json(a_tcp.model()) == model_to_json(a_mem.model()));
  CHECK(model_to_json(b_tcp.model()) == model_to_json(b_mem.model()));
  CHECK(p_tcp.scores == p_mem.scores);
  CHECK(p_tcp.labels == p_mem.labels);
}

TEST_CASE("tcp receive timeout and peer reset yield distinct codes") {
  TcpListener listener("127.0.0.1", 0);
  auto server = std::async(std::launch::async,
                           [&] { return listener.accept(std::chrono::milliseconds(10000)); });
  auto client = tcp_dial("127.0.0.1", listener.port(), std::chrono::milliseconds(10000));
  auto accepted = server.get();

  accepted->set_recv_timeout(std::chrono::milliseconds(50));
  CHECK(code_of([&] { accepted->recv(); }) == ErrorCode::transport_timeout);

  accepted->set_recv_timeout(std::chrono::milliseconds(10000));
  client.reset();
  CHECK(code_of([&] { accepted->recv(); }) == ErrorCode::transport_reset);
}

TEST_CASE("handshake rejects a peer that speaks junk") {
  // Junk client against our listener.
  {
    TcpListener listener("127.0.0.1", 0);
    auto junk = std::async(std::launch::async, [&] { return raw_client(listener.port(), "XYZW"); });
    CHECK(code_of([&] { listener.accept(std::chrono::milliseconds(10000)); }) ==
          ErrorCode::transport_handshake);
    ::close(junk.get());
  }

  // Junk server against our dialer.
  {
    const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(lfd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = 0;
    inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    socklen_t len = sizeof addr;
    getsockname(lfd, reinterpret_cast<sockaddr*>(&addr), &len);
    REQUIRE(::listen(lfd, 1) == 0);

    auto junk = std::async(std::launch::async, [&] {
      const int fd = ::accept(lfd, nullptr, nullptr);
      REQUIRE(fd >= 0);
      REQUIRE(::send(fd, "JUNK", 4, 0) == 4);
      return fd;
    });
    CHECK(code_of([&] {
            tcp_dial("127.0.0.1", ntohs(addr.sin_port), std::chrono::milliseconds(10000));
          }) == ErrorCode::transport_handshake);
    ::close(junk.get());
    ::close(lfd);
  }
}
