#include "process.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <system_error>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

extern char **environ;

namespace liverec {

void Fd::reset() noexcept {
  if (fd_ >= 0)
    ::close(fd_);
  fd_ = -1;
}

namespace {

std::pair<Fd, Fd> make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0)
    throw std::system_error(errno, std::generic_category(), "pipe");
  return {Fd(fds[0]), Fd(fds[1])};
}

int open_output(const std::filesystem::path &path) {
  return ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
}

[[noreturn]] void child_fail(int report_fd, int err) {
  (void)!::write(report_fd, &err, sizeof err);
  ::_exit(127);
}

// Child side of spawn(); only async-signal-safe calls from here on.
[[noreturn]] void exec_child(const SpawnOptions &options, char *const *argv, char *const *envp,
                             int in_fd, int out_fd, int out_file, int err_file, int report_fd) {
  auto die = [report_fd](int err) { child_fail(report_fd, err); };
  if (options.new_session)
    ::setsid();
  if (in_fd >= 0 && ::dup2(in_fd, STDIN_FILENO) < 0)
    die(errno);
  if (in_fd < 0) {
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0)
      ::dup2(devnull, STDIN_FILENO);
  }
  int stdout_target = out_fd >= 0 ? out_fd : out_file;
  if (stdout_target >= 0 && ::dup2(stdout_target, STDOUT_FILENO) < 0)
    die(errno);
  if (options.merge_stderr_into_stdout) {
    if (::dup2(STDOUT_FILENO, STDERR_FILENO) < 0)
      die(errno);
  } else if (err_file >= 0 && ::dup2(err_file, STDERR_FILENO) < 0) {
    die(errno);
  }
  if (options.cwd && ::chdir(options.cwd->c_str()) != 0)
    die(errno);
  ::signal(SIGPIPE, SIG_DFL);
  ::execvpe(argv[0], argv, envp);
  child_fail(report_fd, errno);
}

} // namespace

Subprocess Subprocess::spawn(const SpawnOptions &options) {
  if (options.argv.empty())
    throw std::system_error(EINVAL, std::generic_category(), "empty command line");

  std::vector<std::string> env_strings;
  for (char **e = environ; *e; ++e) {
    std::string_view entry(*e);
    auto eq = entry.find('=');
    if (eq != std::string_view::npos && options.env.count(std::string(entry.substr(0, eq))))
      continue;
    env_strings.emplace_back(entry);
  }
  for (const auto &[name, value] : options.env)
    env_strings.push_back(name + "=" + value);

  std::vector<char *> argv;
  for (const auto &a : options.argv)
    argv.push_back(const_cast<char *>(a.c_str()));
  argv.push_back(nullptr);
  std::vector<char *> envp;
  for (auto &e : env_strings)
    envp.push_back(e.data());
  envp.push_back(nullptr);

  Fd in_read, in_write, out_read, out_write, out_file, err_file;
  if (options.pipe_stdin)
    std::tie(in_read, in_write) = make_pipe();
  if (options.pipe_stdout)
    std::tie(out_read, out_write) = make_pipe();
  if (options.stdout_file) {
    out_file = Fd(open_output(*options.stdout_file));
    if (!out_file)
      throw std::system_error(errno, std::generic_category(), options.stdout_file->string());
  }
  if (options.stderr_file) {
    err_file = Fd(open_output(*options.stderr_file));
    if (!err_file)
      throw std::system_error(errno, std::generic_category(), options.stderr_file->string());
  }
  auto [report_read, report_write] = make_pipe();

  pid_t pid = ::fork();
  if (pid < 0)
    throw std::system_error(errno, std::generic_category(), "fork");
  if (pid == 0)
    exec_child(options, argv.data(), envp.data(), in_read.get(), out_write.get(), out_file.get(),
               err_file.get(), report_write.get());

  report_write.reset();
  int child_errno = 0;
  ssize_t n;
  do {
    n = ::read(report_read.get(), &child_errno, sizeof child_errno);
  } while (n < 0 && errno == EINTR);
  if (n == static_cast<ssize_t>(sizeof child_errno)) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    throw std::system_error(child_errno, std::generic_category(),
                            "cannot start '" + options.argv.front() + "'");
  }

  Subprocess proc;
  proc.pid_ = pid;
  proc.stdin_ = std::move(in_write);
  proc.stdout_ = std::move(out_read);
  return proc;
}

Subprocess::Subprocess(Subprocess &&other) noexcept
    : pid_(std::exchange(other.pid_, -1)), status_(other.status_),
      stdin_(std::move(other.stdin_)), stdout_(std::move(other.stdout_)) {}

Subprocess &Subprocess::operator=(Subprocess &&other) noexcept {
  if (this != &other) {
    kill();
    pid_ = std::exchange(other.pid_, -1);
    status_ = other.status_;
    stdin_ = std::move(other.stdin_);
    stdout_ = std::move(other.stdout_);
  }
  return *this;
}

Subprocess::~Subprocess() { kill(); }

std::optional<int> Subprocess::poll() {
  if (status_ || pid_ <= 0)
    return status_;
  int status = 0;
  pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_)
    status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return status_;
}

int Subprocess::wait() {
  if (status_ || pid_ <= 0)
    return status_.value_or(-1);
  int status = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &status, 0);
  } while (r < 0 && errno == EINTR);
  status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return *status_;
}

void Subprocess::kill() noexcept {
  stdin_.reset();
  stdout_.reset();
  if (pid_ <= 0)
    return;
  if (!status_) {
    // The child leads its own process group; take down its descendants too.
    ::kill(-pid_, SIGKILL);
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    status_ = 128 + SIGKILL;
  }
  pid_ = -1;
}

RunResult run_command(const std::vector<std::string> &argv,
                      const std::optional<std::filesystem::path> &cwd) {
  SpawnOptions options;
  options.argv = argv;
  options.cwd = cwd;
  options.pipe_stdout = true;
  options.merge_stderr_into_stdout = true;
  RunResult result;
  Subprocess proc;
  try {
    proc = Subprocess::spawn(options);
  } catch (const std::system_error &e) {
    result.output = e.what();
    return result;
  }
  char buf[4096];
  while (true) {
    ssize_t n = ::read(proc.stdout_fd().get(), buf, sizeof buf);
    if (n < 0 && errno == EINTR)
      continue;
    if (n <= 0)
      break;
    result.output.append(buf, static_cast<std::size_t>(n));
  }
  result.exit_code = proc.wait();
  return result;
}

bool write_all(int fd, std::string_view data) noexcept {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR)
        continue;
      if (errno == EAGAIN) {
        pollfd p{fd, POLLOUT, 0};
        ::poll(&p, 1, 100);
        continue;
      }
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

std::optional<std::filesystem::path> find_program(const std::string &program) {
  if (program.find('/') != std::string::npos) {
    if (::access(program.c_str(), X_OK) == 0)
      return std::filesystem::path(program);
    return std::nullopt;
  }
  const char *path = std::getenv("PATH");
  std::string_view dirs = path ? path : "/usr/bin:/bin";
  while (!dirs.empty()) {
    auto colon = dirs.find(':');
    std::string_view dir = dirs.substr(0, colon);
    dirs = colon == std::string_view::npos ? std::string_view{} : dirs.substr(colon + 1);
    if (dir.empty())
      continue;
    auto candidate = std::filesystem::path(dir) / program;
    if (::access(candidate.c_str(), X_OK) == 0)
      return candidate;
  }
  return std::nullopt;
}

} // namespace liverec
