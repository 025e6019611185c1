#include "session.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <system_error>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "errors.hpp"

namespace liverec {

using wire::Message;
using wire::MessageKind;

void SessionConfig::validate() const {
  if (adapter_launch.empty() || adapter_launch.front().empty())
    throw LaunchError("adapter command line is empty");
  if (runner_breakpoint.path != runner_path)
    throw LaunchError("runner breakpoint must be inside the runner (" +
                      runner_breakpoint.path.string() + " vs " + runner_path.string() + ")");
  if (runner_breakpoint.line < 1)
    throw LaunchError("runner breakpoint line must be >= 1");
}

const char *to_string(SessionStatus status) noexcept {
  switch (status) {
  case SessionStatus::NotStarted:
    return "not-started";
  case SessionStatus::Launching:
    return "launching";
  case SessionStatus::Idle:
    return "idle";
  case SessionStatus::Running:
    return "running";
  case SessionStatus::Dead:
    return "dead";
  }
  return "?";
}

namespace {

Fd connect_tcp(const std::string &host, int port, std::chrono::steady_clock::time_point deadline) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo *found = nullptr;
  std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0)
    throw LaunchError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, ::freeaddrinfo);

  // The adapter needs a moment before it listens.
  while (true) {
    for (addrinfo *ai = found; ai; ai = ai->ai_next) {
      Fd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
      if (!fd)
        continue;
      if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
        int one = 1;
        ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return fd;
      }
    }
    if (std::chrono::steady_clock::now() >= deadline)
      throw LaunchError("cannot connect to adapter at " + host + ":" + service);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

} // namespace

Session::Session(SessionConfig config) : config_(std::move(config)) {
  // A dead adapter must surface as a failed write, not kill the host.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });
}

Session::~Session() { close(); }

std::optional<pid_t> Session::debuggee_pid() const noexcept {
  if (debuggee_ && debuggee_->valid())
    return debuggee_->pid();
  return std::nullopt;
}

void Session::start_adapter() {
  std::filesystem::create_directories(config_.work_dir / "tmp");
  SpawnOptions options;
  options.argv = config_.adapter_launch;
  options.env = config_.env;
  options.stderr_file = config_.work_dir / "tmp" / "adapter-stderr.txt";
  if (config_.io_mode == IoMode::Stdio) {
    options.pipe_stdin = true;
    options.pipe_stdout = true;
  } else {
    options.stdout_file = config_.work_dir / "tmp" / "adapter-stdout.txt";
  }
  try {
    adapter_ = Subprocess::spawn(options);
  } catch (const std::system_error &e) {
    throw LaunchError(e.what());
  }

  if (config_.io_mode == IoMode::Stdio) {
    write_fd_ = adapter_.stdin_fd().get();
    start_reader(adapter_.stdout_fd().get());
  } else {
    socket_ = connect_tcp(config_.host, config_.port,
                          std::chrono::steady_clock::now() + config_.request_timeout);
    write_fd_ = socket_.get();
    start_reader(socket_.get());
  }
}

void Session::start_reader(int fd) {
  {
    std::lock_guard lock(inbox_mutex_);
    inbox_.clear();
    eof_ = false;
    reader_error_.reset();
  }
  stop_reader_ = false;
  reader_ = std::thread([this, fd] { reader_loop(fd); });
}

void Session::stop_reader() noexcept {
  stop_reader_ = true;
  if (reader_.joinable())
    reader_.join();
}

void Session::reader_loop(int fd) {
  wire::FrameDecoder decoder;
  char buf[16384];
  while (!stop_reader_) {
    pollfd p{fd, POLLIN, 0};
    int ready = ::poll(&p, 1, 50);
    if (ready < 0 && errno == EINTR)
      continue;
    if (ready == 0)
      continue;
    ssize_t n = ::read(fd, buf, sizeof buf);
    if (n < 0 && (errno == EINTR || errno == EAGAIN))
      continue;
    if (n <= 0) {
      std::lock_guard lock(inbox_mutex_);
      eof_ = true;
      inbox_cv_.notify_all();
      return;
    }
    try {
      auto messages = decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
      if (messages.empty())
        continue;
      std::lock_guard lock(inbox_mutex_);
      for (auto &m : messages)
        inbox_.push_back(std::move(m));
      inbox_cv_.notify_all();
    } catch (const ProtocolError &e) {
      std::lock_guard lock(inbox_mutex_);
      reader_error_ = e.what();
      inbox_cv_.notify_all();
      return;
    }
  }
}

void Session::ensure_open() const {
  if (status_ == SessionStatus::Dead)
    throw SessionClosed("session is closed");
  if (status_ == SessionStatus::NotStarted)
    throw SessionClosed("session has not been launched");
}

void Session::mark_dead() noexcept { status_ = SessionStatus::Dead; }

void Session::send(const Message &msg) {
  std::string bytes = wire::encode(msg);
  if (config_.keep_transcript)
    transcript_.push_back(msg);
  if (write_fd_ < 0 || !write_all(write_fd_, bytes)) {
    mark_dead();
    throw DebuggeeTerminated("adapter connection lost");
  }
}

void Session::buffer(Message msg) {
  buffered_.push_back(std::move(msg));
  if (buffered_.size() > kMaxBuffered)
    buffered_.pop_front();
}

std::int64_t Session::send_request(const std::string &command, Json arguments) {
  ensure_open();
  auto msg = wire::make_request(seq_.next(), command, std::move(arguments));
  send(msg);
  return msg.seq;
}

Message Session::request(const std::string &command, Json arguments,
                         std::optional<std::chrono::milliseconds> timeout) {
  std::int64_t seq = send_request(command, std::move(arguments));
  return wait_until(
      [&](const Message &m) { return m.is_response(command) && m.request_seq == seq; }, timeout);
}

Message Session::wait_for(MessageKind kind, std::string_view event, std::string_view command,
                          std::optional<std::chrono::milliseconds> timeout) {
  return wait_until(
      [&](const Message &m) {
        if (m.kind != kind)
          return false;
        if (!event.empty() && m.event != event)
          return false;
        if (!command.empty() && m.command != command)
          return false;
        return true;
      },
      timeout);
}

Message Session::wait_until(const std::function<bool(const Message &)> &match,
                            std::optional<std::chrono::milliseconds> timeout) {
  ensure_open();
  for (auto it = buffered_.begin(); it != buffered_.end(); ++it) {
    if (match(*it)) {
      Message found = std::move(*it);
      buffered_.erase(it);
      return found;
    }
  }

  auto deadline = std::chrono::steady_clock::now() + timeout.value_or(config_.request_timeout);
  while (true) {
    Message msg;
    {
      std::unique_lock lock(inbox_mutex_);
      inbox_cv_.wait_until(lock, deadline,
                           [&] { return !inbox_.empty() || eof_ || reader_error_; });
      if (inbox_.empty()) {
        if (reader_error_) {
          mark_dead();
          throw ProtocolError(*reader_error_);
        }
        if (eof_) {
          mark_dead();
          throw DebuggeeTerminated("debug adapter exited");
        }
        throw SessionTimeout("no matching message from the debug adapter within " +
                             std::to_string(timeout.value_or(config_.request_timeout).count()) +
                             " ms");
      }
      msg = std::move(inbox_.front());
      inbox_.pop_front();
    }

    if (msg.kind == MessageKind::Request) {
      if (handle_reverse_request(msg)) {
        if (status_ == SessionStatus::Dead)
          throw SessionClosed("reverse request '" + msg.command + "' failed");
        continue;
      }
      send(wire::make_response(seq_.next(), msg, false, nullptr,
                               "unsupported reverse request '" + msg.command + "'"));
    }
    if (match(msg))
      return msg;
    if (msg.is_event("terminated")) {
      buffer(std::move(msg));
      mark_dead();
      throw DebuggeeTerminated();
    }
    buffer(std::move(msg));
  }
}

Message Session::wait_stopped(std::optional<std::chrono::milliseconds> timeout) {
  Message stopped = wait_for(MessageKind::Event, "stopped", {}, timeout);
  if (stopped.body.is_object()) {
    auto it = stopped.body.find("threadId");
    if (it != stopped.body.end() && it->is_number_integer())
      thread_id_ = it->get<int>();
  }
  status_ = SessionStatus::Idle;
  return stopped;
}

bool Session::handle_reverse_request(const Message &msg) {
  if (!msg.is_request("runInTerminal"))
    return false;

  auto reply_failure = [&](const std::string &why) {
    mark_dead();
    try {
      send(wire::make_response(seq_.next(), msg, false, nullptr, why));
    } catch (const Error &) {
    }
  };

  if (debuggee_ && debuggee_->valid() && !debuggee_->poll()) {
    reply_failure("a debuggee is already running in this session");
    return true;
  }

  SpawnOptions options;
  const Json &args = msg.body.is_object() ? msg.body : Json::object();
  if (auto it = args.find("args"); it != args.end() && it->is_array())
    for (const auto &a : *it)
      options.argv.push_back(a.is_string() ? a.get<std::string>() : a.dump());
  if (auto it = args.find("cwd"); it != args.end() && it->is_string() && !it->get<std::string>().empty())
    options.cwd = it->get<std::string>();
  if (auto it = args.find("env"); it != args.end() && it->is_object())
    for (const auto &[name, value] : it->items())
      if (value.is_string())
        options.env[name] = value.get<std::string>();
  std::filesystem::create_directories(config_.work_dir / "tmp");
  options.stdout_file = config_.work_dir / "tmp" / "stdout.txt";
  options.stderr_file = config_.work_dir / "tmp" / "stderr.txt";

  try {
    debuggee_ = Subprocess::spawn(options);
  } catch (const std::system_error &e) {
    reply_failure(e.what());
    return true;
  }
  Json body = {{"shellProcessId", debuggee_->pid()}, {"processId", debuggee_->pid()}};
  send(wire::make_response(seq_.next(), msg, true, std::move(body)));
  return true;
}

std::vector<Message> Session::take_buffered() {
  std::vector<Message> out(std::make_move_iterator(buffered_.begin()),
                           std::make_move_iterator(buffered_.end()));
  buffered_.clear();
  return out;
}

void Session::launch() {
  if (status_ != SessionStatus::NotStarted && status_ != SessionStatus::Dead)
    throw LaunchError("session is already launched");
  if (status_ == SessionStatus::Dead)
    close();
  config_.validate();
  buffered_.clear();
  runner_verified_ = false;
  thread_id_ = 1;

  start_adapter();
  status_ = SessionStatus::Launching;
  try {
    auto failed_setup = [](const Message &m) {
      return (m.is_response("initialize") || m.is_response("launch")) && !m.success;
    };
    send_request("initialize", config_.initialize_args);
    send_request("launch", config_.launch_args);
    Message ready = wait_until([&](const Message &m) {
      return m.is_event("initialized") || failed_setup(m);
    });
    if (ready.kind == MessageKind::Response)
      throw LaunchError(ready.command + " failed: " + ready.message.value_or("no reason given"));

    Json bps = set_breakpoints(config_.runner_breakpoint.path, {config_.runner_breakpoint.line});
    if (bps.is_array() && !bps.empty())
      runner_verified_ = bps.front().value("verified", false);
    configuration_done();

    Message idle = wait_until([&](const Message &m) { return m.is_event("stopped") || failed_setup(m); });
    if (idle.kind == MessageKind::Response)
      throw LaunchError(idle.command + " failed: " + idle.message.value_or("no reason given"));
    if (idle.body.is_object() && idle.body.contains("threadId") && idle.body["threadId"].is_number_integer())
      thread_id_ = idle.body["threadId"].get<int>();
  } catch (...) {
    close();
    throw;
  }
  // Setup responses nobody asked for.
  std::erase_if(buffered_, [](const Message &m) {
    return m.is_response("initialize") || m.is_response("launch");
  });
  status_ = SessionStatus::Idle;
}

void Session::restart() {
  close();
  status_ = SessionStatus::NotStarted;
  launch();
}

void Session::close() noexcept {
  if (write_fd_ >= 0 && status_ != SessionStatus::NotStarted) {
    try {
      auto bye = wire::make_request(seq_.next(), "disconnect", Json{{"terminateDebuggee", true}});
      write_all(write_fd_, wire::encode(bye));
    } catch (...) {
    }
  }
  stop_reader();
  write_fd_ = -1;
  socket_.reset();
  adapter_.kill();
  if (debuggee_)
    debuggee_->kill();
  debuggee_.reset();
  if (status_ != SessionStatus::NotStarted)
    status_ = SessionStatus::Dead;
}

Json Session::thread_args(std::optional<int> thread) const {
  return Json{{"threadId", thread.value_or(thread_id_)}};
}

Json Session::set_breakpoints(const std::filesystem::path &path, const std::vector<int> &lines) {
  Json bps = Json::array();
  for (int line : lines)
    bps.push_back(Json{{"line", line}});
  Json args = {
      {"source", {{"name", path.filename().string()}, {"path", path.string()}}},
      {"lines", lines},
      {"breakpoints", bps},
      {"sourceModified", false},
  };
  Message resp = request("setBreakpoints", std::move(args));
  if (!resp.success)
    throw RequestFailed("setBreakpoints failed: " + resp.message.value_or(""));
  return resp.body.is_object() ? resp.body.value("breakpoints", Json::array()) : Json::array();
}

Json Session::set_function_breakpoints(const std::vector<std::string> &names) {
  Json bps = Json::array();
  for (const auto &name : names)
    bps.push_back(Json{{"name", name}});
  Message resp = request("setFunctionBreakpoints", Json{{"breakpoints", bps}});
  if (!resp.success)
    throw RequestFailed("setFunctionBreakpoints failed: " + resp.message.value_or(""));
  return resp.body.is_object() ? resp.body.value("breakpoints", Json::array()) : Json::array();
}

void Session::configuration_done() {
  Message resp = request("configurationDone");
  if (!resp.success)
    throw RequestFailed("configurationDone failed: " + resp.message.value_or(""));
}

std::vector<StackFrame> Session::stack_trace(std::optional<int> thread, int levels) {
  Json args = thread_args(thread);
  args["startFrame"] = 0;
  args["levels"] = levels;
  Message resp = request("stackTrace", std::move(args));
  if (!resp.success)
    throw RequestFailed("stackTrace failed: " + resp.message.value_or(""));
  std::vector<StackFrame> frames;
  if (!resp.body.is_object())
    return frames;
  for (const auto &f : resp.body.value("stackFrames", Json::array())) {
    StackFrame frame;
    frame.id = f.value("id", std::int64_t{0});
    frame.name = f.value("name", std::string{});
    frame.line = f.value("line", 0);
    frame.column = f.value("column", 0);
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<Scope> Session::scopes(std::int64_t frame_id) {
  Message resp = request("scopes", Json{{"frameId", frame_id}});
  if (!resp.success)
    throw RequestFailed("scopes failed: " + resp.message.value_or(""));
  std::vector<Scope> out;
  if (!resp.body.is_object())
    return out;
  for (const auto &s : resp.body.value("scopes", Json::array()))
    out.push_back(Scope{s.value("name", std::string{}), s.value("variablesReference", std::int64_t{0})});
  return out;
}

std::vector<Variable> Session::variables(std::int64_t reference) {
  Message resp = request("variables", Json{{"variablesReference", reference}});
  if (!resp.success)
    throw RequestFailed("variables failed: " + resp.message.value_or(""));
  std::vector<Variable> out;
  if (!resp.body.is_object())
    return out;
  for (const auto &v : resp.body.value("variables", Json::array())) {
    const auto &value = v.contains("value") ? v["value"] : Json();
    out.push_back(Variable{v.value("name", std::string{}),
                           value.is_string() ? value.get<std::string>() : value.dump()});
  }
  return out;
}

Message Session::evaluate(const std::string &expression, std::optional<std::int64_t> frame_id,
                          const std::string &context) {
  Json args = {{"expression", expression}};
  if (frame_id)
    args["frameId"] = *frame_id;
  args["context"] = context;
  return request("evaluate", std::move(args));
}

void Session::step_over(std::optional<int> thread) {
  Message resp = request("next", thread_args(thread));
  if (!resp.success)
    throw RequestFailed("next failed: " + resp.message.value_or(""));
  status_ = SessionStatus::Running;
}

void Session::continue_(std::optional<int> thread) {
  Message resp = request("continue", thread_args(thread));
  if (!resp.success)
    throw RequestFailed("continue failed: " + resp.message.value_or(""));
  status_ = SessionStatus::Running;
}

void Session::step_out(std::optional<int> thread) {
  Message resp = request("stepOut", thread_args(thread));
  if (!resp.success)
    throw RequestFailed("stepOut failed: " + resp.message.value_or(""));
  status_ = SessionStatus::Running;
}

} // namespace liverec
