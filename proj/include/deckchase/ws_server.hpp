#pragma once

// HTTP + WebSocket front end: `/ws` speaks the wire protocol, every other
// GET is served from the static UI directory.

#include "deckchase/live_session.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace deckchase::server {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::string static_root;     // empty disables static serving
  std::size_t client_queue = 32;
};

std::string_view mime_type(std::string_view path);

/// Maps a request target onto a file below `root`; nullopt for paths that
/// escape the root or do not exist.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view target);

class WsServer {
 public:
  /// Binds immediately; throws Error when the address is unavailable.
  WsServer(ServerOptions options, LiveSession& session);
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  unsigned short port() const;
  /// Serves on the calling thread until stop().
  void run();
  void start_background();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace deckchase::server
