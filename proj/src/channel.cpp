#include "fedxfer/channel.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "fedxfer/error.hpp"

namespace fedxfer {
namespace {

constexpr char kHandshake[4] = {'F', 'T', 'L', '1'};

// ---------------------------------------------------------------------------
// In-process pair: two byte-frame queues guarded by one mutex.

struct PairState {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> to_a;
  std::deque<std::vector<std::uint8_t>> to_b;
};

class InProcessChannel final : public Channel {
 public:
  InProcessChannel(std::shared_ptr<PairState> state, bool is_a)
      : state_(std::move(state)), is_a_(is_a) {}

  void send(const FtlMessage& m) override {
    std::vector<std::uint8_t> frame = encode_message(m);
    std::lock_guard<std::mutex> lock(state_->mu);
    (is_a_ ? state_->to_b : state_->to_a).push_back(std::move(frame));
    state_->cv.notify_all();
  }

  FtlMessage recv() override {
    std::unique_lock<std::mutex> lock(state_->mu);
    auto& queue = is_a_ ? state_->to_a : state_->to_b;
    if (!state_->cv.wait_for(lock, timeout_, [&] { return !queue.empty(); }))
      fail(ErrorCode::transport_timeout,
           "no message within " + std::to_string(timeout_.count()) + " ms");
    std::vector<std::uint8_t> frame = std::move(queue.front());
    queue.pop_front();
    lock.unlock();
    return decode_message(frame);
  }

  void set_recv_timeout(std::chrono::milliseconds timeout) override { timeout_ = timeout; }

 private:
  std::shared_ptr<PairState> state_;
  bool is_a_;
  std::chrono::milliseconds timeout_{30000};
};

// ---------------------------------------------------------------------------
// TCP: blocking sockets with poll-based receive timeouts.

[[noreturn]] void fail_errno(ErrorCode code, const std::string& what) {
  fail(code, what + ": " + std::strerror(errno));
}

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }

  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(const FtlMessage& m) override {
    const std::vector<std::uint8_t> frame = encode_message(m);
    std::size_t sent = 0;
    while (sent < frame.size()) {
      const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail_errno(ErrorCode::transport_reset, "send failed");
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  FtlMessage recv() override {
    std::vector<std::uint8_t> frame(9);
    read_exact(frame.data(), 9);
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(frame[5 + i]) << (8 * i);
    frame.resize(9 + static_cast<std::size_t>(len));
    read_exact(frame.data() + 9, len);
    return decode_message(frame);
  }

  void set_recv_timeout(std::chrono::milliseconds timeout) override { timeout_ = timeout; }

  void run_handshake() {
    char buf[4];
    std::memcpy(buf, kHandshake, 4);
    std::size_t sent = 0;
    while (sent < 4) {
      const ssize_t n = ::send(fd_, buf + sent, 4 - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail_errno(ErrorCode::transport_handshake, "handshake send failed");
      }
      sent += static_cast<std::size_t>(n);
    }
    std::uint8_t peer[4];
    read_exact(peer, 4, ErrorCode::transport_handshake);
    if (std::memcmp(peer, kHandshake, 4) != 0)
      fail(ErrorCode::transport_handshake, "peer did not speak the FTL1 handshake");
  }

 private:
  void read_exact(std::uint8_t* dst, std::size_t n,
                  ErrorCode eof_code = ErrorCode::transport_reset) {
    std::size_t got = 0;
    while (got < n) {
      pollfd pfd{fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(timeout_.count()));
      if (pr == 0)
        fail(ErrorCode::transport_timeout,
             "no data within " + std::to_string(timeout_.count()) + " ms");
      if (pr < 0) {
        if (errno == EINTR) continue;
        fail_errno(ErrorCode::transport_reset, "poll failed");
      }
      const ssize_t r = ::recv(fd_, dst + got, n - got, 0);
      if (r == 0) fail(eof_code, "connection closed by peer");
      if (r < 0) {
        if (errno == EINTR) continue;
        fail_errno(eof_code == ErrorCode::transport_handshake ? eof_code
                                                              : ErrorCode::transport_reset,
                   "recv failed");
      }
      got += static_cast<std::size_t>(r);
    }
  }

  int fd_;
  std::chrono::milliseconds timeout_{30000};
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    fail(ErrorCode::config, "not an IPv4 address: '" + host + "'");
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_channel_pair() {
  auto state = std::make_shared<PairState>();
  return {std::make_unique<InProcessChannel>(state, true),
          std::make_unique<InProcessChannel>(state, false)};
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail_errno(ErrorCode::transport_reset, "socket failed");
  int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = make_addr(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const int saved = errno;
    ::close(fd_);
    fd_ = -1;
    errno = saved;
    fail_errno(ErrorCode::transport_reset, "bind to " + host + ":" + std::to_string(port) + " failed");
  }
  socklen_t len = sizeof addr;
  getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::listen(fd_, 1) < 0) {
    const int saved = errno;
    ::close(fd_);
    fd_ = -1;
    errno = saved;
    fail_errno(ErrorCode::transport_reset, "listen failed");
  }
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Channel> TcpListener::accept(std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  const int pr = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (pr == 0)
    fail(ErrorCode::transport_timeout,
         "no peer connected within " + std::to_string(timeout.count()) + " ms");
  if (pr < 0) fail_errno(ErrorCode::transport_reset, "poll on listener failed");
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) fail_errno(ErrorCode::transport_reset, "accept failed");
  auto ch = std::make_unique<TcpChannel>(fd);
  ch->run_handshake();
  return ch;
}

std::unique_ptr<Channel> tcp_dial(const std::string& host, std::uint16_t port,
                                  std::chrono::milliseconds connect_window) {
  const auto deadline = std::chrono::steady_clock::now() + connect_window;
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail_errno(ErrorCode::transport_reset, "socket failed");
    sockaddr_in addr = make_addr(host, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
      auto ch = std::make_unique<TcpChannel>(fd);
      ch->run_handshake();
      return ch;
    }
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      fail(ErrorCode::transport_timeout, "could not connect to " + host + ":" +
                                             std::to_string(port) + " within " +
                                             std::to_string(connect_window.count()) + " ms");
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace fedxfer
