#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "moglow/session.hpp"

namespace moglow::service {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  unsigned threads = 1;
  std::chrono::milliseconds reap_interval = std::chrono::seconds(5);
};

/// WebSocket front end for ServiceCore. Each connection handles its frames
/// strictly in arrival order; connections run independently.
class WsServer {
 public:
  WsServer(ServiceCore& core, ServerOptions options);
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  /// Bound port, valid right after construction.
  std::uint16_t port() const noexcept;
  /// Serves on background threads until stop().
  void start();
  /// Serves on the calling thread (plus extra workers) until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace moglow::service
