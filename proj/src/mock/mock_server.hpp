#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "../wire.hpp"
#include "mock_program.hpp"

namespace liverec::mock {

struct ServerOptions {
  std::optional<std::filesystem::path> program;
  /// Delay applied before every response is written.
  std::chrono::milliseconds latency{0};
  /// Thread id reported in stopped events and `threads`.
  int thread_id = 1;
  /// Number of runInTerminal reverse requests to send during launch.
  int run_in_terminal = 0;
};

/// A deterministic debug adapter that "executes" scripted mock programs
/// inside a simulated keep-alive agent.
///
/// The agent idles on the first runner line containing `while (true)` and
/// calls the armed function from the following line. `handle` is a pure
/// message-in/messages-out step, so the server can run in-process for tests
/// or behind stdio via `serve`.
class Server {
public:
  explicit Server(ServerOptions options = {});

  std::vector<wire::Message> handle(const wire::Message &msg);
  bool finished() const noexcept { return finished_; }

  /// Request loop over two file descriptors; returns on disconnect or EOF.
  int serve(int in_fd, int out_fd);

  static constexpr std::size_t kMaxInvisibleSteps = 1'000'000;

private:
  struct Activation {
    const Function *fn = nullptr;
    std::size_t pc = 0;
    std::vector<std::pair<std::string, std::string>> vars;
    std::optional<std::string> into;
    bool direct = false; // started by a debugger evaluate rather than the agent
  };
  enum class Mode { Continue, StepOver, StepOut };
  enum class Outcome { Stopped, Returned, Exited, Runaway };

  wire::Message respond(const wire::Message &req, bool success, Json body = nullptr,
                        std::optional<std::string> error = std::nullopt);
  wire::Message event(const std::string &name, Json body = nullptr);

  void on_launch(const wire::Message &req);
  void on_set_breakpoints(const wire::Message &req);
  void on_configuration_done(const wire::Message &req);
  void on_stack_trace(const wire::Message &req);
  void on_scopes(const wire::Message &req);
  void on_variables(const wire::Message &req);
  void on_evaluate(const wire::Message &req);
  void on_resume(const wire::Message &req, Mode mode);

  // Execution engine.
  void enter(const Function &fn, const std::vector<std::string> &args, bool direct,
             std::optional<std::string> into = std::nullopt);
  bool entry_breakpoint(const Activation &a) const;
  void run(Mode mode);
  void stop(const std::string &reason);
  void terminate(int code);
  /// Executes the top activation's current step; returns true when that
  /// entered a function carrying a breakpoint.
  bool execute_step(Outcome &outcome);
  void finish_activation(std::optional<std::string> value);

  static void set_var(std::vector<std::pair<std::string, std::string>> &vars,
                      const std::string &name, const std::string &value);

  ServerOptions options_;
  wire::SeqCounter seq_;
  std::vector<wire::Message> out_;
  bool finished_ = false;

  Program program_;
  std::filesystem::path program_path_;
  std::filesystem::path runner_;
  int idle_line_ = 0;
  bool launched_ = false;
  bool configured_ = false;
  bool terminated_ = false;
  bool stopped_ = false;
  bool idle_breakpoint_ = false;
  std::set<std::string> function_breakpoints_;

  std::vector<Activation> stack_;
  int kaa_line_ = 0;
  std::vector<std::pair<std::string, std::string>> kaa_vars_;
  std::optional<std::pair<std::string, std::vector<std::string>>> trigger_;
};

/// Entry point shared by the `mock-adapter` executable.
int run_mock_adapter(int argc, char **argv);

} // namespace liverec::mock
