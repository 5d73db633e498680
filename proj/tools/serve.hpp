#pragma once

#include <memory>
#include <string>

namespace chemlambda::serve {

/// Websocket endpoint hosting steerable reduction sessions. A client opens
/// ws://host:port/session for a new session or ws://host:port/session/ID to
/// reattach to an existing one; messages follow docs/protocol.md. All
/// sessions are driven from the thread that calls run().
class Server {
 public:
  /// Binds immediately; port 0 picks a free port.
  Server(const std::string& address, unsigned short port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;

  /// Serves until stop() is called.
  void run();
  /// Safe to call from any thread.
  void stop();

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace chemlambda::serve
