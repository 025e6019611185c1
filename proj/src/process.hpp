#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <sys/types.h>

namespace liverec {

/// Owning wrapper around a file descriptor.
class Fd {
public:
  Fd() = default;
  explicit Fd(int fd) noexcept : fd_(fd) {}
  Fd(Fd &&other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Fd &operator=(Fd &&other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  Fd(const Fd &) = delete;
  Fd &operator=(const Fd &) = delete;
  ~Fd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  int release() noexcept { return std::exchange(fd_, -1); }
  void reset() noexcept;

private:
  int fd_ = -1;
};

struct SpawnOptions {
  std::vector<std::string> argv;
  /// Added to (and overriding) the parent's environment.
  std::map<std::string, std::string> env;
  std::optional<std::filesystem::path> cwd;
  bool pipe_stdin = false;
  bool pipe_stdout = false;
  /// When set, stdout/stderr go to these files (truncated) instead.
  std::optional<std::filesystem::path> stdout_file;
  std::optional<std::filesystem::path> stderr_file;
  bool merge_stderr_into_stdout = false;
  /// Child leads a new session so the whole process group can be killed.
  bool new_session = true;
};

/// A child process. Destruction kills the process group and reaps it.
class Subprocess {
public:
  /// Throws std::system_error when the program cannot be started
  /// (including exec failures inside the child).
  static Subprocess spawn(const SpawnOptions &options);

  Subprocess() = default;
  Subprocess(Subprocess &&other) noexcept;
  Subprocess &operator=(Subprocess &&other) noexcept;
  ~Subprocess();

  pid_t pid() const noexcept { return pid_; }
  bool valid() const noexcept { return pid_ > 0; }

  Fd &stdin_fd() noexcept { return stdin_; }
  Fd &stdout_fd() noexcept { return stdout_; }

  /// Non-blocking; returns the exit status once the child has finished.
  std::optional<int> poll();
  int wait();
  void kill() noexcept;

private:
  pid_t pid_ = -1;
  std::optional<int> status_;
  Fd stdin_;
  Fd stdout_;
};

struct RunResult {
  int exit_code = -1;
  std::string output; // stdout and stderr interleaved
};

/// Runs a command to completion, capturing its combined output.
RunResult run_command(const std::vector<std::string> &argv,
                      const std::optional<std::filesystem::path> &cwd = std::nullopt);

/// Writes all of `data`, retrying on EINTR/partial writes. Returns false on error.
bool write_all(int fd, std::string_view data) noexcept;

/// Looks up `program` on PATH (or returns it as-is when it contains a slash).
std::optional<std::filesystem::path> find_program(const std::string &program);

} // namespace liverec
