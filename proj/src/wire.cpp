#include "wire.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "errors.hpp"

namespace liverec::wire {

namespace {

constexpr std::string_view kHeaderEnd = "\r\n\r\n";

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

// Printable rendering of raw header bytes for error messages.
std::string escape_bytes(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes.substr(0, 80)) {
    if (c == '\r') {
      out += "\\r";
    } else if (c == '\n') {
      out += "\\n";
    } else if (c < 0x20 || c >= 0x7f) {
      out += "\\x";
      out += kHex[c >> 4];
      out += kHex[c & 0xf];
    } else {
      out += static_cast<char>(c);
    }
  }
  if (bytes.size() > 80)
    out += "...";
  return out;
}

std::int64_t require_seq(const Json &value, const char *field) {
  auto it = value.find(field);
  if (it == value.end() || !it->is_number_integer())
    throw ProtocolError(std::string("message field '") + field + "' missing or not an integer");
  auto seq = it->get<std::int64_t>();
  if (seq <= 0)
    throw ProtocolError(std::string("message field '") + field + "' must be positive");
  return seq;
}

std::string require_string(const Json &value, const char *field) {
  auto it = value.find(field);
  if (it == value.end() || !it->is_string())
    throw ProtocolError(std::string("message field '") + field + "' missing or not a string");
  return it->get<std::string>();
}

} // namespace

const char *to_string(MessageKind kind) noexcept {
  switch (kind) {
  case MessageKind::Request:
    return "request";
  case MessageKind::Response:
    return "response";
  case MessageKind::Event:
    return "event";
  }
  return "?";
}

Message make_request(std::int64_t seq, std::string command, Json arguments) {
  Message m;
  m.kind = MessageKind::Request;
  m.seq = seq;
  m.command = std::move(command);
  m.body = std::move(arguments);
  return m;
}

Message make_event(std::int64_t seq, std::string event, Json body) {
  Message m;
  m.kind = MessageKind::Event;
  m.seq = seq;
  m.event = std::move(event);
  m.body = std::move(body);
  return m;
}

Message make_response(std::int64_t seq, const Message &request, bool success, Json body,
                      std::optional<std::string> error) {
  Message m;
  m.kind = MessageKind::Response;
  m.seq = seq;
  m.request_seq = request.seq;
  m.command = request.command;
  m.success = success;
  m.message = std::move(error);
  m.body = std::move(body);
  return m;
}

Json to_json(const Message &msg) {
  Json out = Json::object();
  out["seq"] = msg.seq;
  out["type"] = to_string(msg.kind);
  switch (msg.kind) {
  case MessageKind::Request:
    out["command"] = msg.command;
    if (!msg.body.is_null())
      out["arguments"] = msg.body;
    break;
  case MessageKind::Response:
    out["request_seq"] = msg.request_seq;
    out["success"] = msg.success;
    out["command"] = msg.command;
    if (msg.message)
      out["message"] = *msg.message;
    if (!msg.body.is_null())
      out["body"] = msg.body;
    break;
  case MessageKind::Event:
    out["event"] = msg.event;
    if (!msg.body.is_null())
      out["body"] = msg.body;
    break;
  }
  for (const auto &[key, value] : msg.extra.items())
    if (!out.contains(key))
      out[key] = value;
  return out;
}

Message from_json(const Json &value) {
  if (!value.is_object())
    throw ProtocolError("message is not a JSON object");
  Message m;
  const std::string type = require_string(value, "type");
  m.seq = require_seq(value, "seq");

  std::vector<std::string_view> known = {"seq", "type"};
  if (type == "request") {
    m.kind = MessageKind::Request;
    m.command = require_string(value, "command");
    if (auto it = value.find("arguments"); it != value.end())
      m.body = *it;
    known.insert(known.end(), {"command", "arguments"});
  } else if (type == "response") {
    m.kind = MessageKind::Response;
    m.request_seq = require_seq(value, "request_seq");
    m.command = require_string(value, "command");
    auto ok = value.find("success");
    if (ok == value.end() || !ok->is_boolean())
      throw ProtocolError("message field 'success' missing or not a boolean");
    m.success = ok->get<bool>();
    if (auto it = value.find("message"); it != value.end() && it->is_string())
      m.message = it->get<std::string>();
    if (auto it = value.find("body"); it != value.end())
      m.body = *it;
    known.insert(known.end(), {"request_seq", "command", "success", "message", "body"});
  } else if (type == "event") {
    m.kind = MessageKind::Event;
    m.event = require_string(value, "event");
    if (auto it = value.find("body"); it != value.end())
      m.body = *it;
    known.insert(known.end(), {"event", "body"});
  } else {
    throw ProtocolError("unknown message type '" + type + "'");
  }

  for (const auto &[key, field] : value.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      m.extra[key] = field;
  }
  // A non-string "message" is not ours to interpret; keep it.
  if (m.kind == MessageKind::Response && !m.message && value.contains("message"))
    m.extra["message"] = value["message"];
  return m;
}

std::string encode(const Message &msg) {
  if (msg.seq <= 0)
    throw EncodeError("message seq must be positive");
  if (msg.kind == MessageKind::Response && msg.request_seq <= 0)
    throw EncodeError("response request_seq must be positive");
  std::string body;
  try {
    body = to_json(msg).dump();
  } catch (const nlohmann::json::exception &e) {
    throw EncodeError(std::string("cannot serialize message body: ") + e.what());
  }
  std::string out = "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n";
  out += body;
  return out;
}

void FrameDecoder::fail(const std::string &why) {
  poisoned_ = true;
  throw ProtocolError(why);
}

std::vector<Message> FrameDecoder::feed(std::string_view chunk) {
  if (poisoned_)
    throw ProtocolError("stream unusable after an earlier protocol error");
  buffer_.append(chunk);

  std::vector<Message> out;
  std::size_t cursor = 0;
  while (true) {
    std::string_view rest(buffer_.data() + cursor, buffer_.size() - cursor);
    if (!body_length_) {
      auto end = rest.find(kHeaderEnd);
      if (end == std::string_view::npos) {
        if (rest.size() > kMaxHeaderBytes)
          fail("header block exceeds " + std::to_string(kMaxHeaderBytes) + " bytes: '" +
               escape_bytes(rest) + "'");
        break;
      }
      std::optional<std::size_t> length;
      std::string_view headers = rest.substr(0, end);
      while (!headers.empty()) {
        auto eol = headers.find("\r\n");
        std::string_view line = headers.substr(0, eol);
        headers = eol == std::string_view::npos ? std::string_view{} : headers.substr(eol + 2);
        auto colon = line.find(':');
        if (colon == std::string_view::npos || colon == 0)
          fail("malformed header line '" + escape_bytes(line) + "'");
        if (!iequals(trim(line.substr(0, colon)), "Content-Length"))
          continue;
        std::string_view digits = trim(line.substr(colon + 1));
        std::size_t n = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size())
          fail("malformed Content-Length header '" + escape_bytes(line) + "'");
        length = n;
      }
      if (!length)
        fail("header block without Content-Length: '" + escape_bytes(rest.substr(0, end)) + "'");
      body_length_ = length;
      header_length_ = end + kHeaderEnd.size();
    }
    if (rest.size() < header_length_ + *body_length_)
      break;

    std::string_view body = rest.substr(header_length_, *body_length_);
    Json parsed = Json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded())
      fail("message body is not valid JSON: '" + escape_bytes(body) + "'");
    try {
      out.push_back(from_json(parsed));
    } catch (const ProtocolError &e) {
      fail(e.what());
    }
    cursor += header_length_ + *body_length_;
    body_length_.reset();
    header_length_ = 0;
  }
  buffer_.erase(0, cursor);
  return out;
}

} // namespace liverec::wire
