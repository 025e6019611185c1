#include <doctest.h>

#include <random>

#include "errors.hpp"
#include "random_messages.hpp"
#include "wire.hpp"

using namespace liverec;
using liverec::wire::FrameDecoder;
using liverec::wire::Message;

TEST_CASE("encode frames the JSON body with its byte length") {
  auto req = wire::make_request(1, "initialize", Json{{"adapterID", "mock"}});
  std::string bytes = wire::encode(req);
  std::string body = R"({"seq":1,"type":"request","command":"initialize","arguments":{"adapterID":"mock"}})";
  CHECK(bytes == "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body);
}

TEST_CASE("Content-Length counts bytes, not characters") {
  auto ev = wire::make_event(3, "output", Json{{"output", "\xe2\x82\xac"}});
  std::string bytes = wire::encode(ev);
  std::string body = bytes.substr(bytes.find("\r\n\r\n") + 4);
  CHECK(bytes.rfind("Content-Length: " + std::to_string(body.size()) + "\r\n", 0) == 0);
  FrameDecoder d;
  auto out = d.feed(bytes);
  REQUIRE(out.size() == 1);
  CHECK(out[0].body["output"] == "\xe2\x82\xac");
}

TEST_CASE("randomized round trip under random chunking") {
  std::mt19937 rng(20240611);
  for (int i = 0; i < 300; ++i) {
    std::vector<Message> sent;
    std::string stream;
    for (int k = std::uniform_int_distribution<int>(1, 4)(rng); k > 0; --k) {
      sent.push_back(test::random_message(rng));
      stream += wire::encode(sent.back());
    }
    FrameDecoder d;
    std::vector<Message> got;
    for (const auto &chunk : test::random_chunks(rng, stream))
      for (auto &m : d.feed(chunk))
        got.push_back(std::move(m));
    REQUIRE(got.size() == sent.size());
    for (std::size_t j = 0; j < sent.size(); ++j)
      CHECK(got[j] == sent[j]);
    CHECK(d.pending_bytes() == 0);
  }
}

TEST_CASE("byte-at-a-time feeding yields each message exactly when complete") {
  auto a = wire::make_event(1, "stopped", Json{{"reason", "step"}, {"threadId", 1}});
  auto b = wire::make_event(2, "continued");
  std::string bytes = wire::encode(a) + wire::encode(b);
  FrameDecoder d;
  std::vector<std::size_t> completed_at;
  for (std::size_t i = 0; i < bytes.size(); ++i)
    if (!d.feed(bytes.substr(i, 1)).empty())
      completed_at.push_back(i + 1);
  CHECK(completed_at == std::vector<std::size_t>{wire::encode(a).size(), bytes.size()});
}

TEST_CASE("unknown top-level fields survive a decode/encode cycle") {
  std::string body = R"({"seq":5,"type":"event","event":"x","vendorField":[1,2]})";
  FrameDecoder d;
  auto out = d.feed("Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body);
  REQUIRE(out.size() == 1);
  CHECK(out[0].extra["vendorField"] == Json::array({1, 2}));
  std::string again = wire::encode(out[0]);
  CHECK(again.substr(again.find("\r\n\r\n") + 4) == body);
}

TEST_CASE("headers are case-insensitive and extra headers are ignored") {
  std::string body = R"({"seq":1,"type":"event","event":"initialized"})";
  FrameDecoder d;
  auto out = d.feed("content-length:" + std::to_string(body.size()) + "\r\nContent-Type: application/json\r\n\r\n" + body);
  REQUIRE(out.size() == 1);
  CHECK(out[0].is_event("initialized"));
}

TEST_CASE("malformed frames poison the decoder") {
  SUBCASE("missing Content-Length") {
    FrameDecoder d;
    CHECK_THROWS_AS(d.feed("X-Other: 1\r\n\r\n{}"), ProtocolError);
    CHECK(d.poisoned());
    CHECK_THROWS_AS(d.feed("Content-Length: 2\r\n\r\n{}"), ProtocolError);
  }
  SUBCASE("non-numeric length") {
    FrameDecoder d;
    CHECK_THROWS_AS(d.feed("Content-Length: 1x\r\n\r\n{}"), ProtocolError);
  }
  SUBCASE("body is not JSON") {
    FrameDecoder d;
    CHECK_THROWS_AS(d.feed("Content-Length: 3\r\n\r\n{x}"), ProtocolError);
  }
  SUBCASE("body is not a message") {
    FrameDecoder d;
    CHECK_THROWS_AS(d.feed("Content-Length: 2\r\n\r\n{}"), ProtocolError);
  }
  SUBCASE("runaway header") {
    FrameDecoder d;
    CHECK_THROWS_AS(d.feed(std::string(FrameDecoder::kMaxHeaderBytes + 1, 'a')), ProtocolError);
  }
}

TEST_CASE("from_json validates required fields") {
  CHECK_THROWS_AS(wire::from_json(Json::array()), ProtocolError);
  CHECK_THROWS_AS(wire::from_json(Json{{"seq", 1}, {"type", "mystery"}}), ProtocolError);
  CHECK_THROWS_AS(wire::from_json(Json{{"seq", 0}, {"type", "event"}, {"event", "x"}}), ProtocolError);
  CHECK_THROWS_AS(wire::from_json(Json{{"seq", 1}, {"type", "response"}, {"request_seq", 1}, {"command", "c"}}),
                  ProtocolError);
}

TEST_CASE("encode rejects broken invariants and invalid UTF-8") {
  CHECK_THROWS_AS(wire::encode(wire::make_event(0, "x")), EncodeError);
  Message resp = wire::make_response(1, wire::make_request(1, "c"), true);
  resp.request_seq = 0;
  CHECK_THROWS_AS(wire::encode(resp), EncodeError);
  CHECK_THROWS_AS(wire::encode(wire::make_event(1, "output", Json{{"output", "\xff\xfe"}})), EncodeError);
}

TEST_CASE("sequence counter starts at 1 and increases") {
  wire::SeqCounter c;
  CHECK(c.next() == 1);
  CHECK(c.next() == 2);
  CHECK(c.last() == 2);
}
