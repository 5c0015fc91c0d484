#pragma once

#include "palpatron/config.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

namespace palpatron::server
{

struct ServerOptions
{
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  Config config;
  std::filesystem::path data_dir = "sessions";
  std::optional<std::filesystem::path> web_root;
  std::optional<std::filesystem::path> mesh;
  /// Exit after the first session is finalized.
  bool once = false;
  std::ostream* log = nullptr;
};

/// Single-trainee palpwire/1 WebSocket service.
///
/// The network runs on the thread calling run(). Each session gets a servo thread
/// paced to the wall clock at 1 kHz that owns the session engine; it hands record
/// lines to the writer's flusher thread and frame snapshots to the network through
/// a latest-value mailbox, so a slow client loses frames but never ticks.
class Server
{
public:
  explicit Server(ServerOptions options);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Port actually bound.
  std::uint16_t port() const;

  /// Serves until stop() or, with `once`, until the first session ends.
  void run();

  /// Finalizes any live session and makes run() return. Thread-safe.
  void stop();

private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace palpatron::server
