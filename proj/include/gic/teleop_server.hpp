#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "gic/session.hpp"

namespace gic {

struct ServerOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  /// Control ticks per wall-clock second; 0 runs as fast as possible.
  double tick_rate = 1000.0;
};

/// WebSocket front end for a SessionCore at the path /session. One client is
/// served at a time; a second connection replaces the first.
class TeleopServer {
 public:
  TeleopServer(ManipulatorModel model, SessionConfig session, ServerOptions options);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Binds and starts the network and control threads. Throws BindFailure.
  void start();
  void stop();
  std::uint16_t port() const;
  std::uint64_t tick_count() const { return ticks_.load(); }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::uint64_t> ticks_{0};
};

}  // namespace gic
