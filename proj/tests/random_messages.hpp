#pragma once

#include <random>
#include <string>
#include <vector>

#include "wire.hpp"

namespace liverec::test {

inline std::string random_text(std::mt19937 &rng) {
  static const std::vector<std::string> pieces = {
      "a", "Z", "0", " ", "\"", "\\", "\n", "\r\n", "\t", "{", "}", "Content-Length: 9\r\n\r\n",
      "\xc3\xa9", "\xe2\x82\xac", "\xf0\x9f\x90\x8d", "\x01", "x=1", "while(true)"};
  std::uniform_int_distribution<int> len(0, 12);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::string out;
  for (int i = len(rng); i > 0; --i)
    out += pieces[pick(rng)];
  return out;
}

inline Json random_json(std::mt19937 &rng, int depth = 0) {
  std::uniform_int_distribution<int> kind(0, depth > 2 ? 4 : 6);
  switch (kind(rng)) {
  case 0:
    return nullptr;
  case 1:
    return std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  case 2:
    return std::uniform_int_distribution<std::int64_t>(-1'000'000'000'000, 1'000'000'000'000)(rng);
  case 3:
    return std::uniform_int_distribution<int>(-1000, 1000)(rng) / 8.0;
  case 4:
    return random_text(rng);
  case 5: {
    Json arr = Json::array();
    for (int i = std::uniform_int_distribution<int>(0, 4)(rng); i > 0; --i)
      arr.push_back(random_json(rng, depth + 1));
    return arr;
  }
  default: {
    Json obj = Json::object();
    for (int i = std::uniform_int_distribution<int>(0, 4)(rng); i > 0; --i)
      obj[random_text(rng) + std::to_string(i)] = random_json(rng, depth + 1);
    return obj;
  }
  }
}

inline wire::Message random_message(std::mt19937 &rng) {
  std::int64_t seq = std::uniform_int_distribution<std::int64_t>(1, 1'000'000)(rng);
  Json body = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? Json(nullptr) : random_json(rng, 1);
  if (!body.is_null() && !body.is_object())
    body = Json{{"value", body}};
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
  case 0:
    return wire::make_request(seq, "cmd" + std::to_string(seq % 17), body);
  case 1: {
    auto req = wire::make_request(std::uniform_int_distribution<std::int64_t>(1, 1000)(rng), "stackTrace");
    bool ok = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    return wire::make_response(seq, req, ok, body,
                               ok ? std::nullopt : std::optional<std::string>(random_text(rng)));
  }
  default:
    return wire::make_event(seq, "ev" + std::to_string(seq % 5), body);
  }
}

/// Splits `bytes` at random positions, including empty chunks.
inline std::vector<std::string> random_chunks(std::mt19937 &rng, const std::string &bytes) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  std::uniform_int_distribution<std::size_t> step(0, 64);
  while (pos < bytes.size()) {
    std::size_t n = std::min(step(rng), bytes.size() - pos);
    out.push_back(bytes.substr(pos, n));
    pos += n;
  }
  return out;
}

} // namespace liverec::test
