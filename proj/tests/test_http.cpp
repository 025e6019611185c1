#include <doctest.h>

#include <httplib.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "http_server.hpp"
#include "support.hpp"

using namespace liverec;
using namespace std::chrono_literals;

namespace {

struct ServerRig {
  ServerRig() {
    service = std::make_unique<ProbeService>(BackendRegistry::builtin(test::context_in(dir.path())));
    server = std::make_unique<HttpServer>(*service, "127.0.0.1", 0);
    server->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", server->port());
    client->set_read_timeout(30, 0);
  }
  ~ServerRig() { server->stop(); }

  httplib::Result probe(const Json &body) { return client->Post("/probe", body.dump(), "application/json"); }

  test::TempDir dir;
  std::unique_ptr<ProbeService> service;
  std::unique_ptr<HttpServer> server;
  std::unique_ptr<httplib::Client> client;
};

} // namespace

TEST_CASE("query helpers") {
  CHECK(url_decode("a%20b+c%2Fd") == "a b c/d");
  CHECK(url_decode("100%") == "100%");
  CHECK(url_decode("%zz") == "%zz");
  CHECK(query_param("language=mock&x=1", "language") == "mock");
  CHECK(query_param("x=1&language=mock-direct", "language") == "mock-direct");
  CHECK(query_param("lang=mock", "language") == std::nullopt);
  CHECK(query_param("", "language") == std::nullopt);
  CHECK(query_param("language=a%2Bb", "language") == "a+b");
}

TEST_CASE("POST /probe returns the ProbeResult") {
  ServerRig rig;
  auto res = rig.probe(Json{{"language", "mock"}, {"source", test::fixture("search_g.mock")}});
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->get_header_value("Content-Type").find("application/json") != std::string::npos);
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
  Json j = Json::parse(res->body);
  CHECK(j["outcome"] == "recording");
  CHECK(j["language"] == "mock");
  CHECK(j["probe"]["function"] == "binarySearch");
  CHECK(j["recording"]["status"] == "completed");
  CHECK(j["recording"]["return"] == "-1");
  CHECK(j["recording"]["snapshots"].size() > 10);
  CHECK(j["recording"]["histories"][0]["entries"][0].contains("line"));

  auto err = rig.probe(Json{{"language", "mock"}, {"source", "{}"}});
  REQUIRE(err);
  CHECK(err->status == 200);
  CHECK(Json::parse(err->body)["outcome"] == "annotation_error");
}

TEST_CASE("POST /probe rejects bad requests") {
  ServerRig rig;
  auto malformed = rig.client->Post("/probe", "{nope", "application/json");
  REQUIRE(malformed);
  CHECK(malformed->status == 400);
  CHECK(Json::parse(malformed->body).contains("error"));
  auto missing = rig.probe(Json{{"language", "mock"}});
  REQUIRE(missing);
  CHECK(missing->status == 400);
  auto unknown = rig.probe(Json{{"language", "cobol"}, {"source", "x"}});
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  auto get = rig.client->Get("/probe");
  REQUIRE(get);
  CHECK(get->status == 405);
  auto nowhere = rig.client->Get("/nowhere");
  REQUIRE(nowhere);
  CHECK(nowhere->status == 404);
}

TEST_CASE("CORS preflight") {
  ServerRig rig;
  auto res = rig.client->Options("/probe");
  REQUIRE(res);
  CHECK(res->status == 204);
  CHECK(res->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);
}

TEST_CASE("GET /backends") {
  ServerRig rig;
  auto res = rig.client->Get("/backends");
  REQUIRE(res);
  CHECK(res->status == 200);
  Json j = Json::parse(res->body);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 4);
  for (const auto &b : j) {
    CHECK(b.contains("id"));
    CHECK(b.contains("description"));
    CHECK(b["available"].is_boolean());
    CHECK(b.contains("reason"));
  }
  CHECK(j[1]["id"] == "mock");
  CHECK(j[1]["available"] == true);
}

TEST_CASE("GET /recordings/latest") {
  ServerRig rig;
  auto missing = rig.client->Get("/recordings/latest");
  REQUIRE(missing);
  CHECK(missing->status == 400);
  auto unknown = rig.client->Get("/recordings/latest?language=cobol");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  auto none = rig.client->Get("/recordings/latest?language=mock");
  REQUIRE(none);
  CHECK(none->status == 404);
  rig.probe(Json{{"language", "mock"}, {"source", test::fixture("foo.mock")}});
  auto latest = rig.client->Get("/recordings/latest?language=mock");
  REQUIRE(latest);
  CHECK(latest->status == 200);
  CHECK(Json::parse(latest->body)["recording"]["return"] == "3");
}

TEST_CASE("the /live socket pushes results of its language") {
  namespace beast = boost::beast;
  namespace websocket = beast::websocket;
  using tcp = boost::asio::ip::tcp;

  ServerRig rig;
  boost::asio::io_context ioc;
  tcp::resolver resolver(ioc);
  websocket::stream<tcp::socket> ws(ioc);
  boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(rig.server->port())));
  ws.handshake("127.0.0.1", "/live?language=mock");

  auto res = rig.probe(Json{{"language", "mock"}, {"source", test::fixture("foo.mock")}});
  REQUIRE(res);
  REQUIRE(res->status == 200);

  beast::flat_buffer buffer;
  ws.read(buffer);
  CHECK(ws.got_text());
  Json pushed = Json::parse(beast::buffers_to_string(buffer.data()));
  CHECK(pushed == Json::parse(res->body));
  ws.close(websocket::close_code::normal);
}

TEST_CASE("stop is idempotent and frees the port") {
  test::TempDir dir;
  ProbeService service(BackendRegistry::builtin(test::context_in(dir.path())));
  HttpServer server(service, "127.0.0.1", 0);
  server.start();
  unsigned short port = server.port();
  CHECK(port != 0);
  server.stop();
  server.stop();
  HttpServer again(service, "127.0.0.1", port);
  CHECK_NOTHROW(again.start());
  again.stop();
}
