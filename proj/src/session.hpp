#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "process.hpp"
#include "wire.hpp"

namespace liverec {

enum class IoMode { Stdio, Socket };

struct SourceLine {
  std::filesystem::path path;
  int line = 0;
};

struct SessionConfig {
  std::vector<std::string> adapter_launch;
  Json initialize_args = Json::object();
  Json launch_args = Json::object();
  std::filesystem::path runner_path;
  /// Where the keep-alive agent idles; path must equal runner_path.
  SourceLine runner_breakpoint;
  std::map<std::string, std::string> env;
  IoMode io_mode = IoMode::Stdio;
  std::string host = "127.0.0.1";
  int port = 0;
  /// Debuggee output lands in `<work_dir>/tmp/{stdout,stderr}.txt`.
  std::filesystem::path work_dir = ".";
  std::chrono::milliseconds request_timeout{10000};
  /// Keep a copy of every outgoing message (tests and diagnostics).
  bool keep_transcript = false;

  /// Throws LaunchError when an invariant does not hold.
  void validate() const;
};

enum class SessionStatus { NotStarted, Launching, Idle, Running, Dead };

const char *to_string(SessionStatus status) noexcept;

struct StackFrame {
  std::int64_t id = 0;
  std::string name;
  int line = 0;
  int column = 0;
};

struct Scope {
  std::string name;
  std::int64_t variables_reference = 0;
};

struct Variable {
  std::string name;
  std::string value;
  friend bool operator==(const Variable &, const Variable &) = default;
};

/// A scripted debug session over one adapter process.
///
/// A reader thread drains the adapter stream into an inbox; every blocking
/// call consumes from it on the caller's thread. Messages that do not match
/// what a caller waits for are buffered in arrival order, never dropped.
/// One logical owner at a time.
class Session {
public:
  explicit Session(SessionConfig config);
  ~Session();
  Session(const Session &) = delete;
  Session &operator=(const Session &) = delete;

  /// Spawns the adapter, runs initialize/launch, arms the runner breakpoint
  /// and returns once the keep-alive agent is stopped on it.
  void launch();
  /// Kills adapter and debuggee, then launches afresh.
  void restart();
  void close() noexcept;

  SessionStatus status() const noexcept { return status_; }
  const SessionConfig &config() const noexcept { return config_; }
  bool runner_breakpoint_verified() const noexcept { return runner_verified_; }
  int thread_id() const noexcept { return thread_id_; }
  std::optional<pid_t> debuggee_pid() const noexcept;
  pid_t adapter_pid() const noexcept { return adapter_.pid(); }

  std::int64_t send_request(const std::string &command, Json arguments = nullptr);
  /// Sends a request and waits for the response that answers it.
  wire::Message request(const std::string &command, Json arguments = nullptr,
                        std::optional<std::chrono::milliseconds> timeout = std::nullopt);

  wire::Message wait_for(wire::MessageKind kind, std::string_view event = {},
                         std::string_view command = {},
                         std::optional<std::chrono::milliseconds> timeout = std::nullopt);
  wire::Message wait_until(const std::function<bool(const wire::Message &)> &match,
                           std::optional<std::chrono::milliseconds> timeout = std::nullopt);
  /// Waits for the next `stopped` event and records its thread id.
  wire::Message wait_stopped(std::optional<std::chrono::milliseconds> timeout = std::nullopt);

  /// Answers adapter-to-client requests; only runInTerminal is understood.
  bool handle_reverse_request(const wire::Message &msg);

  std::vector<wire::Message> take_buffered();
  std::size_t buffered_count() const noexcept { return buffered_.size(); }
  const std::vector<wire::Message> &transcript() const noexcept { return transcript_; }

  Json set_breakpoints(const std::filesystem::path &path, const std::vector<int> &lines);
  Json set_function_breakpoints(const std::vector<std::string> &names);
  void configuration_done();

  std::vector<StackFrame> stack_trace(std::optional<int> thread = std::nullopt, int levels = 100);
  std::vector<Scope> scopes(std::int64_t frame_id);
  std::vector<Variable> variables(std::int64_t reference);
  wire::Message evaluate(const std::string &expression, std::optional<std::int64_t> frame_id,
                         const std::string &context = "repl");

  void step_over(std::optional<int> thread = std::nullopt);
  void continue_(std::optional<int> thread = std::nullopt);
  void step_out(std::optional<int> thread = std::nullopt);

  static constexpr std::size_t kMaxBuffered = 4096;

private:
  void start_adapter();
  void start_reader(int fd);
  void stop_reader() noexcept;
  void reader_loop(int fd);
  void send(const wire::Message &msg);
  void ensure_open() const;
  void mark_dead() noexcept;
  void buffer(wire::Message msg);
  Json thread_args(std::optional<int> thread) const;

  SessionConfig config_;
  SessionStatus status_ = SessionStatus::NotStarted;
  wire::SeqCounter seq_;
  Subprocess adapter_;
  std::optional<Subprocess> debuggee_;
  Fd socket_;
  int write_fd_ = -1;
  bool runner_verified_ = false;
  int thread_id_ = 1;

  std::thread reader_;
  std::atomic<bool> stop_reader_{false};
  std::mutex inbox_mutex_;
  std::condition_variable inbox_cv_;
  std::deque<wire::Message> inbox_;
  bool eof_ = false;
  std::optional<std::string> reader_error_;

  std::deque<wire::Message> buffered_;
  std::vector<wire::Message> transcript_;
};

} // namespace liverec
