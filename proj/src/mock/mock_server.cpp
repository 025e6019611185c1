#include "mock_server.hpp"

#include <cctype>
#include <fstream>
#include <iostream>
#include <thread>

#include <poll.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "../errors.hpp"
#include "../probespec.hpp"
#include "../process.hpp"

namespace liverec::mock {

using wire::Message;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

// 'text' or "text" -> text; nullopt when not a single quoted literal.
std::optional<std::string> unquote(std::string_view s) {
  s = trim(s);
  if (s.size() < 2 || (s.front() != '\'' && s.front() != '"') || s.back() != s.front())
    return std::nullopt;
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size())
      ++i;
    else if (s[i] == s.front())
      return std::nullopt;
    out += s[i];
  }
  return out;
}

// name(args) -> {name, inner}; the parenthesis must close at the very end.
std::optional<std::pair<std::string, std::string>> split_call(std::string_view s) {
  s = trim(s);
  auto open = s.find('(');
  if (open == std::string_view::npos || s.empty() || s.back() != ')')
    return std::nullopt;
  auto name = trim(s.substr(0, open));
  if (!is_identifier(name))
    return std::nullopt;
  return std::pair{std::string(name), std::string(s.substr(open + 1, s.size() - open - 2))};
}

bool is_literal(std::string_view s) {
  if (s.empty())
    return false;
  if (unquote(s))
    return true;
  if (s == "None" || s == "True" || s == "False" || s == "null" || s == "true" || s == "false")
    return true;
  std::size_t i = (s.front() == '-' || s.front() == '+') ? 1 : 0;
  bool digits = false, dot = false;
  for (; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i])))
      digits = true;
    else if (s[i] == '.' && !dot)
      dot = true;
    else
      return false;
  }
  return digits;
}

} // namespace

Server::Server(ServerOptions options) : options_(std::move(options)) {
  if (options_.program) {
    program_ = load_program(*options_.program);
    program_path_ = *options_.program;
  }
}

Message Server::respond(const Message &req, bool success, Json body,
                        std::optional<std::string> error) {
  auto m = wire::make_response(seq_.next(), req, success, std::move(body), std::move(error));
  out_.push_back(m);
  return m;
}

Message Server::event(const std::string &name, Json body) {
  auto m = wire::make_event(seq_.next(), name, std::move(body));
  out_.push_back(m);
  return m;
}

std::vector<Message> Server::handle(const Message &msg) {
  out_.clear();
  if (msg.kind != wire::MessageKind::Request)
    return {}; // replies to our reverse requests, stray events

  const std::string &cmd = msg.command;
  auto needs_args = [&] {
    if (!msg.body.is_object()) {
      respond(msg, false, nullptr, "'" + cmd + "' needs arguments");
      return false;
    }
    return true;
  };

  if (cmd == "initialize") {
    respond(msg, true,
            Json{{"supportsConfigurationDoneRequest", true},
                 {"supportsFunctionBreakpoints", true},
                 {"supportsEvaluateForHovers", false},
                 {"supportsStepBack", false}});
  } else if (cmd == "launch") {
    if (needs_args())
      on_launch(msg);
  } else if (cmd == "disconnect" || cmd == "terminate") {
    respond(msg, true);
    finished_ = cmd == "disconnect";
    if (cmd == "terminate")
      terminate(0);
  } else if (terminated_) {
    respond(msg, false, nullptr, "debuggee has terminated");
  } else if (cmd == "setBreakpoints") {
    if (needs_args())
      on_set_breakpoints(msg);
  } else if (cmd == "setFunctionBreakpoints") {
    if (!needs_args())
      return out_;
    function_breakpoints_.clear();
    Json verified = Json::array();
    for (const auto &bp : msg.body.value("breakpoints", Json::array())) {
      std::string name = bp.value("name", std::string{});
      function_breakpoints_.insert(name);
      verified.push_back(Json{{"verified", program_.find_by_name(name) != nullptr}});
    }
    respond(msg, true, Json{{"breakpoints", verified}});
  } else if (cmd == "configurationDone") {
    on_configuration_done(msg);
  } else if (cmd == "threads") {
    respond(msg, true,
            Json{{"threads", Json::array({Json{{"id", options_.thread_id}, {"name", "main"}}})}});
  } else if (cmd == "stackTrace") {
    if (needs_args())
      on_stack_trace(msg);
  } else if (cmd == "scopes") {
    if (needs_args())
      on_scopes(msg);
  } else if (cmd == "variables") {
    if (needs_args())
      on_variables(msg);
  } else if (cmd == "evaluate") {
    if (needs_args())
      on_evaluate(msg);
  } else if (cmd == "continue") {
    on_resume(msg, Mode::Continue);
  } else if (cmd == "next") {
    on_resume(msg, Mode::StepOver);
  } else if (cmd == "stepOut") {
    on_resume(msg, Mode::StepOut);
  } else {
    respond(msg, false, nullptr, "unsupported request '" + cmd + "'");
  }
  return out_;
}

void Server::on_launch(const Message &req) {
  if (launched_) {
    respond(req, false, nullptr, "already launched");
    return;
  }
  std::string program = req.body.value("program", std::string{});
  std::ifstream in(program);
  if (program.empty() || !in) {
    respond(req, false, nullptr, "cannot read runner '" + program + "'");
    return;
  }
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find("while (true)") != std::string::npos) {
      idle_line_ = n;
      break;
    }
  }
  if (idle_line_ == 0) {
    respond(req, false, nullptr, "runner '" + program + "' has no idle loop");
    return;
  }
  runner_ = program;
  launched_ = true;
  kaa_line_ = idle_line_;
  respond(req, true);
  event("initialized");
  for (int i = 0; i < options_.run_in_terminal; ++i) {
    auto reverse = wire::make_request(
        seq_.next(), "runInTerminal",
        Json{{"kind", "integrated"},
             {"title", "mock debuggee"},
             {"cwd", runner_.parent_path().string()},
             {"args", Json::array({"sleep", "60"})}});
    out_.push_back(reverse);
  }
}

void Server::on_set_breakpoints(const Message &req) {
  std::string path;
  if (auto src = req.body.find("source"); src != req.body.end() && src->is_object())
    path = src->value("path", std::string{});
  std::vector<int> lines;
  if (auto bps = req.body.find("breakpoints"); bps != req.body.end() && bps->is_array()) {
    for (const auto &bp : *bps)
      lines.push_back(bp.value("line", 0));
  } else {
    for (const auto &l : req.body.value("lines", Json::array()))
      lines.push_back(l.get<int>());
  }
  bool in_runner = !path.empty() && launched_ && std::filesystem::path(path) == runner_;
  Json result = Json::array();
  if (in_runner)
    idle_breakpoint_ = false;
  for (int l : lines) {
    bool verified = in_runner && l == idle_line_;
    idle_breakpoint_ = idle_breakpoint_ || verified;
    result.push_back(Json{{"verified", verified}, {"line", l}});
  }
  respond(req, true, Json{{"breakpoints", result}});
}

void Server::on_configuration_done(const Message &req) {
  respond(req, true);
  configured_ = true;
  if (launched_ && idle_breakpoint_ && !stopped_)
    stop("breakpoint");
}

void Server::on_stack_trace(const Message &req) {
  if (!stopped_) {
    respond(req, false, nullptr, "debuggee is not stopped");
    return;
  }
  Json frames = Json::array();
  for (std::size_t i = stack_.size(); i-- > 0;) {
    const auto &a = stack_[i];
    const auto &step = a.fn->steps[a.pc];
    frames.push_back(Json{{"id", static_cast<std::int64_t>(i) + 2},
                          {"name", a.fn->name},
                          {"line", step.line},
                          {"column", step.column},
                          {"source", {{"name", program_path_.filename().string()},
                                      {"path", program_path_.string()}}}});
  }
  frames.push_back(Json{{"id", 1},
                        {"name", "kaa_main"},
                        {"line", kaa_line_},
                        {"column", 1},
                        {"source", {{"name", runner_.filename().string()}, {"path", runner_.string()}}}});
  std::size_t total = frames.size();
  respond(req, true, Json{{"stackFrames", frames}, {"totalFrames", total}});
}

void Server::on_scopes(const Message &req) {
  auto id = req.body.value("frameId", std::int64_t{0});
  if (!stopped_ || id < 1 || id > static_cast<std::int64_t>(stack_.size()) + 1) {
    respond(req, false, nullptr, "unknown frame " + std::to_string(id));
    return;
  }
  respond(req, true,
          Json{{"scopes", Json::array({Json{{"name", "Locals"},
                                            {"variablesReference", id},
                                            {"expensive", false}}})}});
}

void Server::on_variables(const Message &req) {
  auto ref = req.body.value("variablesReference", std::int64_t{0});
  if (!stopped_ || ref < 1 || ref > static_cast<std::int64_t>(stack_.size()) + 1) {
    respond(req, false, nullptr, "unknown variables reference " + std::to_string(ref));
    return;
  }
  const auto &vars = ref == 1 ? kaa_vars_ : stack_[static_cast<std::size_t>(ref - 2)].vars;
  Json out = Json::array();
  for (const auto &[name, value] : vars)
    out.push_back(Json{{"name", name}, {"value", value}, {"variablesReference", 0}});
  respond(req, true, Json{{"variables", out}});
}

void Server::on_evaluate(const Message &req) {
  const std::string expression = req.body.value("expression", std::string{});
  std::string_view expr = trim(expression);
  auto ok = [&](const std::string &result) {
    respond(req, true, Json{{"result", result}, {"variablesReference", 0}});
  };
  auto fail = [&](const std::string &why) { respond(req, false, nullptr, why); };

  auto call = split_call(expr);
  if (call && call->first == "load") {
    auto path = unquote(call->second);
    if (!path) {
      fail("load expects one quoted path");
      return;
    }
    try {
      program_ = load_program(*path);
      program_path_ = *path;
    } catch (const std::exception &e) {
      fail(e.what());
      return;
    }
    ok("None");
    event("output", Json{{"category", "console"}, {"output", "loaded " + *path + "\n"}});
    return;
  }
  if (call && call->first == "set_method") {
    std::vector<std::string> parts;
    try {
      parts = split_arguments(call->second);
    } catch (const AnnotationError &e) {
      fail(e.what());
      return;
    }
    auto name = parts.size() == 2 ? unquote(parts[0]) : std::nullopt;
    std::string_view list = parts.size() == 2 ? trim(parts[1]) : std::string_view{};
    if (!name || list.size() < 2 || list.front() != '[' || list.back() != ']') {
      fail("set_method expects ('name', [args])");
      return;
    }
    try {
      trigger_ = std::pair{*name, split_arguments(list.substr(1, list.size() - 2))};
    } catch (const AnnotationError &e) {
      fail(e.what());
      return;
    }
    ok("None");
    return;
  }
  if (call) {
    const Function *fn = program_.find_by_name(call->first);
    if (!fn) {
      fail("name '" + call->first + "' is not defined");
      return;
    }
    if (!stopped_ || !stack_.empty()) {
      fail("can only call functions while the agent is idle");
      return;
    }
    std::vector<std::string> args;
    try {
      args = split_arguments(call->second);
    } catch (const AnnotationError &e) {
      fail(e.what());
      return;
    }
    // The response goes out before whatever the call produces.
    std::size_t mark = out_.size();
    kaa_vars_.clear();
    enter(*fn, args, /*direct=*/true);
    if (entry_breakpoint(stack_.back())) {
      stopped_ = false;
      std::vector<Message> pending(out_.begin() + static_cast<std::ptrdiff_t>(mark), out_.end());
      out_.resize(mark);
      ok("");
      stop("function breakpoint");
      out_.insert(out_.end(), pending.begin(), pending.end());
      return;
    }
    stopped_ = false;
    run(Mode::Continue);
    std::vector<Message> produced(out_.begin() + static_cast<std::ptrdiff_t>(mark), out_.end());
    out_.resize(mark);
    if (terminated_) {
      fail("debuggee exited during the call");
    } else {
      std::string result = "void";
      for (const auto &[name, value] : kaa_vars_)
        if (name == "__return__")
          result = value;
      ok(result);
    }
    out_.insert(out_.end(), produced.begin(), produced.end());
    return;
  }
  if (is_literal(expr)) {
    ok(std::string(expr));
    return;
  }
  if (is_identifier(expr) && stopped_) {
    auto id = req.body.value("frameId", std::int64_t{0});
    const std::vector<std::pair<std::string, std::string>> *vars = nullptr;
    if (id == 1)
      vars = &kaa_vars_;
    else if (id >= 2 && id <= static_cast<std::int64_t>(stack_.size()) + 1)
      vars = &stack_[static_cast<std::size_t>(id - 2)].vars;
    if (vars)
      for (const auto &[name, value] : *vars)
        if (name == expr) {
          ok(value);
          return;
        }
    fail("name '" + std::string(expr) + "' is not defined");
    return;
  }
  fail("cannot evaluate '" + std::string(expr) + "'");
}

void Server::on_resume(const Message &req, Mode mode) {
  if (!launched_ || !stopped_) {
    respond(req, false, nullptr, "debuggee is not stopped");
    return;
  }
  if (mode == Mode::Continue)
    respond(req, true, Json{{"allThreadsContinued", true}});
  else
    respond(req, true);
  stopped_ = false;
  run(mode);
}

void Server::set_var(std::vector<std::pair<std::string, std::string>> &vars,
                     const std::string &name, const std::string &value) {
  for (auto &[n, v] : vars) {
    if (n == name) {
      v = value;
      return;
    }
  }
  vars.emplace_back(name, value);
}

void Server::enter(const Function &fn, const std::vector<std::string> &args, bool direct,
                   std::optional<std::string> into) {
  Activation a;
  a.fn = &fn;
  a.direct = direct;
  a.into = std::move(into);
  for (std::size_t i = 0; i < fn.params.size(); ++i)
    a.vars.emplace_back(fn.params[i], i < args.size() ? args[i] : "None");
  stack_.push_back(std::move(a));
}

bool Server::entry_breakpoint(const Activation &a) const {
  return function_breakpoints_.count(a.fn->name) > 0;
}

void Server::stop(const std::string &reason) {
  stopped_ = true;
  event("stopped", Json{{"reason", reason},
                        {"threadId", options_.thread_id},
                        {"allThreadsStopped", true}});
}

void Server::terminate(int code) {
  terminated_ = true;
  stopped_ = false;
  stack_.clear();
  event("exited", Json{{"exitCode", code}});
  event("terminated");
}

void Server::run(Mode mode) {
  const std::size_t start_depth = stack_.size();
  for (std::size_t budget = 0; budget < kMaxInvisibleSteps; ++budget) {
    if (stack_.empty()) {
      if (kaa_line_ != idle_line_) {
        // Back from the agent's call into its loop.
        kaa_vars_.clear();
        kaa_line_ = idle_line_;
        if (mode != Mode::Continue || idle_breakpoint_) {
          stop(mode == Mode::Continue ? "breakpoint" : "step");
          return;
        }
        continue;
      }
      if (trigger_) {
        auto [name, args] = std::move(*trigger_);
        trigger_.reset();
        // A missing function raises inside the agent, which swallows it.
        if (const Function *fn = program_.find_by_name(name)) {
          kaa_vars_.clear();
          kaa_line_ = idle_line_ + 1;
          enter(*fn, args, /*direct=*/false);
          if (entry_breakpoint(stack_.back())) {
            stop("function breakpoint");
            return;
          }
          continue;
        }
      }
      if (mode != Mode::Continue || idle_breakpoint_) {
        stop(mode == Mode::Continue ? "breakpoint" : "step");
        return;
      }
      continue;
    }

    Outcome outcome = Outcome::Stopped;
    bool hit = execute_step(outcome);
    if (outcome == Outcome::Exited)
      return;
    if (hit) {
      stop("function breakpoint");
      return;
    }
    if (outcome == Outcome::Returned) {
      // A debugger-initiated call finished: control is back with the client.
      stop(mode == Mode::Continue ? "breakpoint" : "step");
      return;
    }
    if (stack_.empty()) {
      if (mode != Mode::Continue) {
        stop("step");
        return;
      }
      continue;
    }
    const std::size_t depth = stack_.size();
    if ((mode == Mode::StepOver && depth <= start_depth) ||
        (mode == Mode::StepOut && depth < start_depth)) {
      stop("step");
      return;
    }
  }
  stop("pause");
}

bool Server::execute_step(Outcome &outcome) {
  outcome = Outcome::Stopped;
  Activation &top = stack_.back();
  const Step &step = top.fn->steps[top.pc];
  for (const auto &[name, value] : step.updates)
    set_var(top.vars, name, value);

  if (std::holds_alternative<Stay>(step.action)) {
    ++top.pc;
  } else if (auto *jump = std::get_if<Jump>(&step.action)) {
    top.pc = jump->target;
  } else if (auto *call = std::get_if<Call>(&step.action)) {
    ++top.pc;
    std::vector<std::string> args;
    for (const auto &a : call->args) {
      // Arguments naming a caller variable pass its value.
      std::string value = a;
      for (const auto &[n, v] : top.vars)
        if (n == a)
          value = v;
      args.push_back(value);
    }
    enter(*program_.find(call->function), args, /*direct=*/false, call->into);
    return entry_breakpoint(stack_.back());
  } else if (auto *ret = std::get_if<Return>(&step.action)) {
    bool direct = top.direct && stack_.size() == 1;
    finish_activation(ret->value);
    if (direct)
      outcome = Outcome::Returned;
    return false;
  } else if (auto *exit = std::get_if<Exit>(&step.action)) {
    terminate(exit->code);
    outcome = Outcome::Exited;
    return false;
  }

  if (!stack_.empty() && stack_.back().pc >= stack_.back().fn->steps.size()) {
    bool direct = stack_.back().direct && stack_.size() == 1;
    finish_activation(std::nullopt);
    if (direct)
      outcome = Outcome::Returned;
  }
  return false;
}

void Server::finish_activation(std::optional<std::string> value) {
  while (true) {
    Activation done = std::move(stack_.back());
    stack_.pop_back();
    if (stack_.empty()) {
      kaa_vars_.clear();
      if (value)
        kaa_vars_.emplace_back("__return__", *value);
      kaa_line_ = done.direct ? idle_line_ : idle_line_ + 1;
      return;
    }
    Activation &caller = stack_.back();
    if (done.into && value)
      set_var(caller.vars, *done.into, *value);
    if (caller.pc < caller.fn->steps.size())
      return;
    // Falling off the caller's end returns from it as well.
    value.reset();
  }
}

int Server::serve(int in_fd, int out_fd) {
  wire::FrameDecoder decoder;
  char buf[16384];
  while (!finished_) {
    ssize_t n = ::read(in_fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR)
      continue;
    if (n <= 0)
      return 0;
    std::vector<Message> requests;
    try {
      requests = decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    } catch (const ProtocolError &e) {
      std::cerr << "mock-adapter: " << e.what() << "\n";
      return 2;
    }
    for (const auto &req : requests) {
      for (const auto &reply : handle(req)) {
        if (reply.kind == wire::MessageKind::Response && options_.latency.count() > 0)
          std::this_thread::sleep_for(options_.latency);
        if (!write_all(out_fd, wire::encode(reply)))
          return 1;
      }
      if (finished_)
        break;
    }
  }
  return 0;
}

int run_mock_adapter(int argc, char **argv) {
  CLI::App app{"Deterministic debug adapter that replays scripted mock programs"};
  std::string program;
  int latency = 0;
  ServerOptions options;
  app.add_option("--program", program, "Mock program loaded at start");
  app.add_option("--latency", latency, "Delay before every response, in milliseconds")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--thread-id", options.thread_id, "Thread id reported to the client");
  app.add_option("--run-in-terminal", options.run_in_terminal,
                 "runInTerminal reverse requests to send during launch");
  CLI11_PARSE(app, argc, argv);

  if (!program.empty())
    options.program = program;
  options.latency = std::chrono::milliseconds(latency);
  try {
    Server server(options);
    return server.serve(STDIN_FILENO, STDOUT_FILENO);
  } catch (const std::exception &e) {
    std::cerr << "mock-adapter: " << e.what() << "\n";
    return 2;
  }
}

} // namespace liverec::mock
