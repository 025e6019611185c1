#include <doctest.h>

#include <fstream>

#include "backends.hpp"
#include "mock/mock_program.hpp"
#include "mock/mock_server.hpp"
#include "support.hpp"

using namespace liverec;
using liverec::wire::Message;

namespace {

// Drives an in-process mock server the way a client would.
struct Driver {
  explicit Driver(const std::filesystem::path &dir) : dir(dir) {
    runner = dir / "kaa.mock";
    std::ofstream(runner) << embedded_asset("kaa/kaa.mock");
  }

  std::vector<Message> send(const std::string &command, Json args = nullptr) {
    auto out = server.handle(wire::make_request(seq.next(), command, std::move(args)));
    transcript.insert(transcript.end(), out.begin(), out.end());
    return out;
  }

  Message call(const std::string &command, Json args = nullptr) {
    for (auto &m : send(command, std::move(args)))
      if (m.is_response(command))
        return m;
    FAIL("no response to " << command);
    return {};
  }

  void launch() {
    call("initialize", Json{{"adapterID", "mock"}});
    auto out = send("launch", Json{{"program", runner.string()}});
    REQUIRE(out.size() == 2);
    CHECK(out[1].is_event("initialized"));
    auto bps = call("setBreakpoints", Json{{"source", {{"path", runner.string()}}}, {"breakpoints", {{{"line", 3}}}}});
    CHECK(bps.body["breakpoints"][0]["verified"] == true);
    auto done = send("configurationDone");
    REQUIRE(done.size() == 2);
    CHECK(done[1].is_event("stopped"));
  }

  std::filesystem::path write(const std::string &name, const std::string &text) {
    auto p = dir / name;
    std::ofstream(p) << text;
    return p;
  }

  Json top() {
    auto st = call("stackTrace", Json{{"threadId", 1}});
    return st.body["stackFrames"][0];
  }

  std::vector<std::pair<std::string, std::string>> locals() {
    auto frame = top();
    auto scopes = call("scopes", Json{{"frameId", frame["id"]}});
    auto ref = scopes.body["scopes"][0]["variablesReference"];
    std::vector<std::pair<std::string, std::string>> out;
    auto vars = call("variables", Json{{"variablesReference", ref}});
    for (const auto &v : vars.body["variables"])
      out.emplace_back(v["name"].get<std::string>(), v["value"].get<std::string>());
    return out;
  }

  std::filesystem::path dir;
  std::filesystem::path runner;
  mock::Server server;
  wire::SeqCounter seq;
  std::vector<Message> transcript;
};

bool stopped_in(const std::vector<Message> &out) {
  for (const auto &m : out)
    if (m.is_event("stopped"))
      return true;
  return false;
}

} // namespace

TEST_CASE("program format: comments keep line numbers, errors name the problem") {
  auto p = mock::parse_program(test::fixture("foo.mock"));
  REQUIRE(p.find("foo"));
  CHECK(p.find("foo")->steps.size() == 9);
  CHECK(p.find("foo")->params == std::vector<std::string>{"n"});
  CHECK(mock::strip_comment_lines("// a\n{}\n") == "\n{}\n");
  CHECK_THROWS_AS(mock::parse_program("{"), std::invalid_argument);
  CHECK_THROWS_AS(mock::parse_program(R"({"functions": {"f": {"steps": [{"line": 1, "call": "g"}]}}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(mock::parse_program(R"({"functions": {"f": {"steps": [{"line": 1, "goto": 5}]}}})"),
                  std::invalid_argument);
}

TEST_CASE("recursive fixture entries share one display name") {
  auto p = mock::parse_program(test::fixture("fact.mock"));
  REQUIRE(p.find_by_name("fact"));
  CHECK(p.find_by_name("fact") == p.find("fact"));
  CHECK(p.find("fact_3")->name == "fact");
}

TEST_CASE("idle stop, then continue with nothing armed returns to idle") {
  test::TempDir dir;
  Driver d(dir.path());
  d.launch();
  CHECK(d.top()["name"] == "kaa_main");
  CHECK(d.top()["line"] == 3);
  auto out = d.send("continue", Json{{"threadId", 1}});
  CHECK(stopped_in(out));
  CHECK(d.top()["line"] == 3);
}

TEST_CASE("stepping foo(3) visits the scripted states in order") {
  test::TempDir dir;
  Driver d(dir.path());
  d.launch();
  auto prog = d.write("foo.mock", test::fixture("foo.mock"));
  CHECK(d.call("evaluate", Json{{"expression", "load('" + prog.string() + "')"}}).success);
  d.call("setFunctionBreakpoints", Json{{"breakpoints", {{{"name", "foo"}}}}});
  CHECK(d.call("evaluate", Json{{"expression", "set_method('foo',[3])"}}).success);
  CHECK(stopped_in(d.send("continue", Json{{"threadId", 1}})));

  // [DERIVED] hand execution of foo(3): (line, i) before each statement.
  const std::vector<std::pair<int, std::string>> expected = {
      {3, ""}, {4, "0"}, {5, "0"}, {4, "1"}, {5, "1"}, {4, "2"}, {5, "2"}, {4, "3"}, {7, "3"}};
  for (const auto &[line, i] : expected) {
    CAPTURE(line);
    auto frame = d.top();
    CHECK(frame["name"] == "foo");
    CHECK(frame["line"] == line);
    auto vars = d.locals();
    REQUIRE(!vars.empty());
    CHECK(vars[0] == std::pair<std::string, std::string>{"n", "3"});
    if (i.empty())
      CHECK(vars.size() == 1);
    else
      CHECK(vars.back() == std::pair<std::string, std::string>{"i", i});
    d.send("next", Json{{"threadId", 1}});
  }
  // Back in the agent with the return value visible.
  auto frame = d.top();
  CHECK(frame["name"] == "kaa_main");
  bool found = false;
  for (const auto &[name, value] : d.locals())
    if (name == "__return__") {
      CHECK(value == "3");
      found = true;
    }
  CHECK(found);
}

TEST_CASE("step over never enters an unarmed callee") {
  test::TempDir dir;
  Driver d(dir.path());
  d.launch();
  auto prog = d.write("helper.mock", test::fixture("helper.mock"));
  d.call("evaluate", Json{{"expression", "load('" + prog.string() + "')"}});
  d.call("setFunctionBreakpoints", Json{{"breakpoints", {{{"name", "outer"}}}}});
  d.call("evaluate", Json{{"expression", "set_method('outer',[2])"}});
  d.send("continue", Json{{"threadId", 1}});
  for (int i = 0; i < 20 && d.top()["name"] == "outer"; ++i) {
    d.send("next", Json{{"threadId", 1}});
    CHECK(d.top()["name"] != "helper");
  }
  CHECK(d.top()["name"] == "kaa_main");
}

TEST_CASE("armed recursion grows the stack by one frame per entry") {
  test::TempDir dir;
  Driver d(dir.path());
  d.launch();
  auto prog = d.write("fact.mock", test::fixture("fact.mock"));
  d.call("evaluate", Json{{"expression", "load('" + prog.string() + "')"}});
  d.call("setFunctionBreakpoints", Json{{"breakpoints", {{{"name", "fact"}}}}});
  d.call("evaluate", Json{{"expression", "set_method('fact',[3])"}});
  d.send("continue", Json{{"threadId", 1}});
  auto depth = [&] { return d.call("stackTrace", Json{{"threadId", 1}}).body["stackFrames"].size(); };
  CHECK(depth() == 2);
  d.send("continue", Json{{"threadId", 1}});
  CHECK(depth() == 3);
  d.send("continue", Json{{"threadId", 1}});
  CHECK(depth() == 4);
}

TEST_CASE("direct calls run from the debugger and answer with the return value") {
  test::TempDir dir;
  Driver d(dir.path());
  d.launch();
  auto prog = d.write("foo.mock", test::fixture("foo.mock"));
  d.call("evaluate", Json{{"expression", "load('" + prog.string() + "')"}});
  auto r = d.call("evaluate", Json{{"expression", "foo(3)"}});
  CHECK(r.success);
  CHECK(r.body["result"] == "3");
  CHECK_FALSE(d.call("evaluate", Json{{"expression", "nosuch(1)"}}).success);
}

TEST_CASE("protocol errors get error responses and the server keeps going") {
  test::TempDir dir;
  Driver d(dir.path());
  d.launch();
  CHECK_FALSE(d.call("flyToTheMoon").success);
  CHECK_FALSE(d.call("scopes", Json{{"frameId", 999}}).success);
  CHECK_FALSE(d.call("evaluate", Json{{"expression", "load('/no/such/file')"}}).success);
  CHECK_FALSE(d.call("launch", Json{{"program", d.runner.string()}}).success);
  CHECK(d.call("threads").success);
}

TEST_CASE("a crashing program exits the debuggee") {
  test::TempDir dir;
  Driver d(dir.path());
  d.launch();
  auto prog = d.write("crash.mock", test::fixture("crash.mock"));
  d.call("evaluate", Json{{"expression", "load('" + prog.string() + "')"}});
  d.call("setFunctionBreakpoints", Json{{"breakpoints", {{{"name", "crash"}}}}});
  d.call("evaluate", Json{{"expression", "set_method('crash',[0])"}});
  d.send("continue", Json{{"threadId", 1}});
  bool terminated = false;
  for (int i = 0; i < 10 && !terminated; ++i)
    for (const auto &m : d.send("next", Json{{"threadId", 1}}))
      terminated = terminated || m.is_event("terminated");
  CHECK(terminated);
}

TEST_CASE("replaying a request transcript reproduces the response transcript byte for byte") {
  auto run = [](const std::filesystem::path &dir) {
    Driver d(dir);
    d.launch();
    auto prog = d.write("search_g.mock", test::fixture("search_g.mock"));
    d.call("evaluate", Json{{"expression", "load('" + prog.string() + "')"}});
    d.call("setFunctionBreakpoints", Json{{"breakpoints", {{{"name", "binarySearch"}}}}});
    d.call("evaluate", Json{{"expression", "set_method('binarySearch',['g', ['a','b','c','d','e','f']])"}});
    d.send("continue", Json{{"threadId", 1}});
    for (int i = 0; i < 25; ++i) {
      d.locals();
      d.send("next", Json{{"threadId", 1}});
    }
    std::string bytes;
    for (const auto &m : d.transcript)
      bytes += wire::encode(m);
    return bytes;
  };
  test::TempDir dir;
  std::string a = run(dir.path());
  std::string b = run(dir.path());
  CHECK(a.size() > 1000);
  CHECK(a == b);
}

TEST_CASE("every emitted message survives the codec unchanged") {
  test::TempDir dir;
  Driver d(dir.path());
  d.launch();
  auto prog = d.write("fact.mock", test::fixture("fact.mock"));
  d.call("evaluate", Json{{"expression", "load('" + prog.string() + "')"}});
  d.call("setFunctionBreakpoints", Json{{"breakpoints", {{{"name", "fact"}}}}});
  d.call("evaluate", Json{{"expression", "set_method('fact',[3])"}});
  d.send("continue", Json{{"threadId", 1}});
  for (int i = 0; i < 10; ++i)
    d.send("next", Json{{"threadId", 1}});
  wire::FrameDecoder decoder;
  for (const auto &m : d.transcript) {
    auto out = decoder.feed(wire::encode(m));
    REQUIRE(out.size() == 1);
    CHECK(out[0] == m);
  }
}
