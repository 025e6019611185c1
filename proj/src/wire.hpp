#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace liverec {

/// Structured values travel as insertion-ordered JSON so that adapter field
/// order survives a decode/encode cycle.
using Json = nlohmann::ordered_json;

namespace wire {

enum class MessageKind { Request, Response, Event };

const char *to_string(MessageKind kind) noexcept;

/// One Debug Adapter Protocol message.
///
/// `body` holds `arguments` for requests and `body` for responses and events;
/// a null value means the field is absent on the wire. Top-level fields the
/// codec does not know about are kept in `extra` and written back verbatim.
struct Message {
  MessageKind kind = MessageKind::Event;
  std::int64_t seq = 0;
  std::string command;
  std::int64_t request_seq = 0;
  bool success = true;
  std::optional<std::string> message;
  std::string event;
  Json body;
  Json extra = Json::object();

  bool is_request(std::string_view cmd = {}) const {
    return kind == MessageKind::Request && (cmd.empty() || command == cmd);
  }
  bool is_response(std::string_view cmd = {}) const {
    return kind == MessageKind::Response && (cmd.empty() || command == cmd);
  }
  bool is_event(std::string_view name = {}) const {
    return kind == MessageKind::Event && (name.empty() || event == name);
  }

  friend bool operator==(const Message &, const Message &) = default;
};

Message make_request(std::int64_t seq, std::string command, Json arguments = nullptr);
Message make_event(std::int64_t seq, std::string event, Json body = nullptr);
Message make_response(std::int64_t seq, const Message &request, bool success,
                      Json body = nullptr, std::optional<std::string> error = std::nullopt);

Json to_json(const Message &msg);

/// Throws ProtocolError when `value` is not a well-formed message.
Message from_json(const Json &value);

/// `Content-Length: <n>\r\n\r\n<body>`. Throws EncodeError when the message
/// breaks its invariants or the body is not serializable (invalid UTF-8).
std::string encode(const Message &msg);

/// Incremental decoder for a byte stream of framed messages.
///
/// Chunks may split anywhere. Once a malformed frame is seen the decoder is
/// poisoned and every later `feed` throws: the peer must be restarted.
class FrameDecoder {
public:
  std::vector<Message> feed(std::string_view chunk);

  bool poisoned() const noexcept { return poisoned_; }
  std::size_t pending_bytes() const noexcept { return buffer_.size(); }

  static constexpr std::size_t kMaxHeaderBytes = 16 * 1024;

private:
  [[noreturn]] void fail(const std::string &why);

  std::string buffer_;
  std::optional<std::size_t> body_length_;
  std::size_t header_length_ = 0;
  bool poisoned_ = false;
};

/// Per-sender sequence numbers; the first call to `next` returns 1.
class SeqCounter {
public:
  std::int64_t next() noexcept { return ++last_; }
  std::int64_t last() const noexcept { return last_; }

private:
  std::int64_t last_ = 0;
};

} // namespace wire
} // namespace liverec
