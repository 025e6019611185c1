#pragma once

#include <atomic>
#include <condition_variable>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "service.hpp"

namespace liverec {

/// HTTP + WebSocket front of a ProbeService.
///
///   POST /probe                  {language, source} -> ProbeResult
///   GET  /backends               -> [{id, description, available, reason}]
///   GET  /recordings/latest?language=
///   GET  /live?language=         WebSocket, one ProbeResult per text frame
///
/// One thread per connection; the service does the real serialization.
class HttpServer {
public:
  HttpServer(ProbeService &service, std::string host, unsigned short port);
  ~HttpServer();
  HttpServer(const HttpServer &) = delete;
  HttpServer &operator=(const HttpServer &) = delete;

  /// Binds and starts accepting in the background; throws Error on bind failure.
  void start();
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();

  unsigned short port() const noexcept { return port_; }
  const std::string &host() const noexcept { return host_; }

private:
  struct Connection;
  void accept_loop();
  void serve(Connection &conn);
  void reap_finished();

  ProbeService &service_;
  std::string host_;
  unsigned short port_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;

  std::mutex connections_mutex_;
  std::list<std::unique_ptr<Connection>> connections_;

  std::mutex stop_mutex_;
  std::mutex wait_mutex_;
  std::condition_variable wait_cv_;
  bool stopped_ = false;
};

/// Decodes %XX and '+' in a query component.
std::string url_decode(std::string_view text);
/// Value of `key` in a `a=1&b=2` query string, decoded.
std::optional<std::string> query_param(std::string_view query, std::string_view key);

} // namespace liverec
