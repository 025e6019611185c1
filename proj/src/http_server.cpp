#include "http_server.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <deque>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace liverec {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

std::string url_decode(std::string_view text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '+') {
      out += ' ';
    } else if (c == '%' && i + 2 < text.size() && std::isxdigit(static_cast<unsigned char>(text[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(text[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(text.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += c;
    }
  }
  return out;
}

std::optional<std::string> query_param(std::string_view query, std::string_view key) {
  std::size_t pos = 0;
  while (pos <= query.size()) {
    auto amp = query.find('&', pos);
    auto part = query.substr(pos, amp == std::string_view::npos ? query.npos : amp - pos);
    auto eq = part.find('=');
    if (url_decode(part.substr(0, eq)) == key)
      return eq == std::string_view::npos ? std::string() : url_decode(part.substr(eq + 1));
    if (amp == std::string_view::npos)
      break;
    pos = amp + 1;
  }
  return std::nullopt;
}

struct HttpServer::Connection {
  std::thread thread;
  int fd = -1;
  bool done = false;
};

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

Response json_response(const Request &req, http::status status, const Json &body) {
  Response res{status, req.version()};
  res.set(http::field::server, "liverec");
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

Response error_response(const Request &req, http::status status, const std::string &message) {
  return json_response(req, status, Json{{"error", message}});
}

std::pair<std::string, std::string> split_target(std::string_view target) {
  auto q = target.find('?');
  if (q == std::string_view::npos)
    return {std::string(target), {}};
  return {std::string(target.substr(0, q)), std::string(target.substr(q + 1))};
}

Response handle(ProbeService &service, const Request &req) {
  auto [path, query] = split_target(std::string_view(req.target().data(), req.target().size()));

  if (req.method() == http::verb::options) {
    Response res{http::status::no_content, req.version()};
    res.set(http::field::access_control_allow_origin, "*");
    res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
    res.keep_alive(req.keep_alive());
    res.prepare_payload();
    return res;
  }

  if (path == "/probe") {
    if (req.method() != http::verb::post)
      return error_response(req, http::status::method_not_allowed, "use POST");
    Json body = Json::parse(req.body(), nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("language") ||
        !body["language"].is_string() || !body.contains("source") || !body["source"].is_string())
      return error_response(req, http::status::bad_request,
                            "expected a JSON object with string fields 'language' and 'source'");
    try {
      ProbeResult result = service.submit(body["language"].get<std::string>(),
                                          body["source"].get<std::string>());
      return json_response(req, http::status::ok, to_json(result));
    } catch (const UnknownLanguage &e) {
      return error_response(req, http::status::not_found, e.what());
    } catch (const Superseded &) {
      return error_response(req, http::status::conflict, "superseded");
    } catch (const std::exception &e) {
      return error_response(req, http::status::service_unavailable, e.what());
    }
  }

  if (req.method() != http::verb::get)
    return error_response(req, http::status::method_not_allowed, "use GET");

  if (path == "/backends") {
    Json out = Json::array();
    for (const auto &s : service.backend_status()) {
      Json entry = {{"id", s.id}, {"description", s.description}, {"available", s.available},
                    {"reason", s.reason}};
      if (const Backend *b = service.registry().find(s.id)) {
        entry["comment_marker"] = b->comment_marker();
        entry["caller"] = to_string(b->caller());
        entry["compile"] = b->has_compile();
      }
      out.push_back(std::move(entry));
    }
    return json_response(req, http::status::ok, out);
  }

  if (path == "/recordings/latest") {
    auto language = query_param(query, "language");
    if (!language || language->empty())
      return error_response(req, http::status::bad_request, "missing ?language=");
    auto langs = service.languages();
    if (std::find(langs.begin(), langs.end(), *language) == langs.end())
      return error_response(req, http::status::not_found, "unknown language '" + *language + "'");
    auto latest = service.latest(*language);
    if (!latest)
      return error_response(req, http::status::not_found, "no recording yet");
    return json_response(req, http::status::ok, to_json(*latest));
  }

  return error_response(req, http::status::not_found, "no route for " + path);
}

} // namespace

HttpServer::HttpServer(ProbeService &service, std::string host, unsigned short port)
    : service_(service), host_(std::move(host)), port_(port) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo *found = nullptr;
  std::string service = std::to_string(port_);
  if (int rc = ::getaddrinfo(host_.c_str(), service.c_str(), &hints, &found); rc != 0)
    throw Error("cannot resolve " + host_ + ": " + ::gai_strerror(rc));
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, ::freeaddrinfo);

  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0)
    throw Error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, found->ai_addr, found->ai_addrlen) != 0 || ::listen(fd, 64) != 0) {
    std::string why = std::strerror(errno);
    ::close(fd);
    throw Error("cannot listen on " + host_ + ":" + service + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd, reinterpret_cast<sockaddr *>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  listen_fd_ = fd;
  stopping_ = false;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void HttpServer::accept_loop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    int rc = ::poll(&p, 1, 100);
    reap_finished();
    if (rc <= 0)
      continue;
    int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0)
      continue;
    std::lock_guard lock(connections_mutex_);
    auto conn = std::make_unique<Connection>();
    conn->fd = fd;
    Connection &ref = *conn;
    connections_.push_back(std::move(conn));
    ref.thread = std::thread([this, &ref] { serve(ref); });
  }
}

void HttpServer::reap_finished() {
  std::list<std::unique_ptr<Connection>> finished;
  {
    std::lock_guard lock(connections_mutex_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if ((*it)->done) {
        finished.push_back(std::move(*it));
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto &c : finished)
    if (c->thread.joinable())
      c->thread.join();
}

void HttpServer::serve(Connection &conn) {
  net::io_context ioc;
  tcp::socket sock(ioc);
  beast::error_code ec;
  sock.assign(tcp::v4(), conn.fd, ec);
  if (!ec) {
    beast::flat_buffer buffer;
    while (!stopping_) {
      http::request_parser<http::string_body> parser;
      parser.body_limit(16 * 1024 * 1024);
      http::read(sock, buffer, parser, ec);
      if (ec)
        break;
      Request req = parser.release();
      if (websocket::is_upgrade(req)) {
        auto [path, query] = split_target(std::string_view(req.target().data(), req.target().size()));
        if (path != "/live") {
          http::write(sock, error_response(req, http::status::not_found, "no socket at " + path), ec);
          break;
        }
        std::string language = query_param(query, "language").value_or("");
        // Subscribe before the handshake so nothing published after it is missed.
        struct Outbox {
          std::mutex mutex;
          std::deque<std::string> messages;
        };
        auto outbox = std::make_shared<Outbox>();
        auto id = service_.subscribe(language, [outbox](const ProbeResult &r) {
          std::lock_guard lock(outbox->mutex);
          outbox->messages.push_back(to_json(r).dump());
        });
        websocket::stream<tcp::socket &> ws(sock);
        ws.accept(req, ec);
        if (ec) {
          service_.unsubscribe(id);
          break;
        }
        ws.text(true);
        while (!stopping_) {
          std::deque<std::string> pending;
          {
            std::lock_guard lock(outbox->mutex);
            pending.swap(outbox->messages);
          }
          for (const auto &m : pending) {
            ws.write(net::buffer(m), ec);
            if (ec)
              break;
          }
          if (ec)
            break;
          pollfd p{conn.fd, POLLIN, 0};
          if (::poll(&p, 1, 20) > 0) {
            beast::flat_buffer incoming;
            ws.read(incoming, ec); // client messages are ignored; this also answers close and ping
            if (ec)
              break;
          }
        }
        service_.unsubscribe(id);
        break;
      }
      Response res = handle(service_, req);
      bool keep = res.keep_alive();
      http::write(sock, res, ec);
      if (ec || !keep)
        break;
    }
  }
  std::lock_guard lock(connections_mutex_);
  sock.shutdown(tcp::socket::shutdown_both, ec);
  sock.close(ec);
  conn.fd = -1;
  conn.done = true;
}

void HttpServer::stop() {
  std::lock_guard guard(stop_mutex_);
  if (listen_fd_ < 0)
    return;
  stopping_ = true;
  if (acceptor_.joinable())
    acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  {
    std::lock_guard lock(connections_mutex_);
    for (auto &c : connections_)
      if (c->fd >= 0)
        ::shutdown(c->fd, SHUT_RDWR);
  }
  std::list<std::unique_ptr<Connection>> all;
  {
    std::lock_guard lock(connections_mutex_);
    all.swap(connections_);
  }
  for (auto &c : all)
    if (c->thread.joinable())
      c->thread.join();
  {
    std::lock_guard lock(wait_mutex_);
    stopped_ = true;
  }
  wait_cv_.notify_all();
}

void HttpServer::wait() {
  std::unique_lock lock(wait_mutex_);
  wait_cv_.wait(lock, [&] { return stopped_; });
}

} // namespace liverec
