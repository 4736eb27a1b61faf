#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "fedxfer/message.hpp"

namespace fedxfer {

/// Duplex, ordered, reliable message pipe between the two parties. One end is
/// owned by one party loop; an end must not be used from two threads at once.
class Channel {
 public:
  virtual ~Channel() = default;

  virtual void send(const FtlMessage& m) = 0;

  /// Blocks until a full message arrives or the receive timeout elapses.
  virtual FtlMessage recv() = 0;

  virtual void set_recv_timeout(std::chrono::milliseconds timeout) = 0;
};

/// Two connected in-memory endpoints. Frames are byte-encoded and decoded just
/// like on the wire, so both transports exercise the same serialization.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_channel_pair();

/// Party A's side of the TCP convention: A listens, B dials. Splitting bind
/// from accept lets the caller publish the bound port (port 0 picks a free
/// one) before blocking on the peer.
class TcpListener {
 public:
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }

  /// Accepts a single peer and runs the magic handshake.
  std::unique_ptr<Channel> accept(std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Party B's side: dial host:port, retrying until the connect window closes,
/// then run the magic handshake.
std::unique_ptr<Channel> tcp_dial(const std::string& host, std::uint16_t port,
                                  std::chrono::milliseconds connect_window =
                                      std::chrono::milliseconds(10000));

}  // namespace fedxfer
