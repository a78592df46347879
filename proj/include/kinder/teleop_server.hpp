#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "kinder/teleop.hpp"

namespace kinder::teleop {

/// WebSocket endpoint (any path) plus static files from cfg.static_dir.
class Server {
 public:
  Server(ServerConfig cfg, const std::string& host, std::uint16_t port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bound port (useful with port 0).
  std::uint16_t port() const;
  /// Blocks until stop().
  void run();
  /// Thread-safe.
  void stop();
  std::size_t live_sessions() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace kinder::teleop
