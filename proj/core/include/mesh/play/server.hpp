#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mesh/play/session.hpp"

namespace mesh::play {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  std::uint64_t seed = 0;      // default session seed when a join has none
};

/// Websocket endpoint for live rounds. Each connection may join one session;
/// the server drives the clock at 6 ticks/s and drops stale state frames for
/// clients that cannot keep up rather than delaying the tick loop.
class PlayServer {
 public:
  PlayServer(std::shared_ptr<SessionManager> sessions, ServerOptions options);
  ~PlayServer();
  PlayServer(const PlayServer&) = delete;
  PlayServer& operator=(const PlayServer&) = delete;

  /// Bound port, valid after construction.
  unsigned short port() const;
  /// Serves until stop() is called.
  void run();
  /// Safe to call from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mesh::play
