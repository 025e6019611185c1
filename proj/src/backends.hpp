#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "session.hpp"

namespace liverec {

struct ProbeRequest;

/// Who starts the probed function: the keep-alive agent, released by a
/// continue, or the debugger through a direct call expression.
enum class Caller { Debuggee, Debugger };

const char *to_string(Caller caller) noexcept;

struct ReturnRule {
  enum class Kind { None, Variable, Evaluate };
  Kind kind = Kind::None;
  /// Variable name or expression; may use ${function}.
  std::string text;
};

/// The data-driven description of one debuggee language. Strings may use
/// ${...} placeholders that are expanded when the backend is used.
struct BackendManifest {
  std::string id;
  std::string description;
  std::string comment_marker;
  std::string source_extension;

  std::vector<std::string> adapter;
  IoMode io_mode = IoMode::Stdio;
  std::string host = "127.0.0.1";
  int port = 0;
  Json initialize_args = Json::object();
  Json launch_args = Json::object();
  std::map<std::string, std::string> env;

  /// Embedded asset holding the keep-alive agent and the line it idles on.
  std::string kaa_asset;
  int kaa_line = 0;
  /// Optional command turning the agent source into ${runner_exe}.
  std::vector<std::string> kaa_build;

  /// Empty for interpreted targets.
  std::vector<std::string> compile;
  std::string artifact_extension;

  std::string load_expression;
  /// Continue once after the load expression so the agent picks it up.
  bool load_resumes = false;
  /// Evaluated after loading; any result other than `load_check_ok` is the load error.
  std::string load_check;
  std::string load_check_ok = "None";
  /// When set, the load expression itself must evaluate to this.
  std::optional<std::string> load_expect;

  Caller caller = Caller::Debuggee;
  std::string invoke_template;
  /// Continue cycles allowed before the function breakpoint must be hit.
  int invoke_cycles = 8;
  ReturnRule return_rule;
  int reset_cycles = 0;

  /// Command that must exit 0 for the backend to be usable.
  std::vector<std::string> requires_command;

  /// Throws BackendError naming the first bad field.
  static BackendManifest from_json(const Json &j);
};

/// Host-side settings shared by all backends.
struct BackendContext {
  std::filesystem::path work_dir = "liverec-work";
  std::string python = "python3";
  std::filesystem::path mock_adapter;
  /// Appended to every adapter command line (e.g. `--latency 1`).
  std::vector<std::string> extra_adapter_args;
};

class Backend {
public:
  Backend(BackendManifest manifest, BackendContext context);

  const std::string &id() const noexcept { return manifest_.id; }
  const BackendManifest &manifest() const noexcept { return manifest_; }
  const BackendContext &context() const noexcept { return context_; }
  const std::string &comment_marker() const noexcept { return manifest_.comment_marker; }
  Caller caller() const noexcept { return manifest_.caller; }
  bool has_compile() const noexcept { return !manifest_.compile.empty(); }

  /// Absent when the backend's tools are present, else what is missing.
  std::optional<std::string> unavailable_reason() const;

  std::filesystem::path work_dir() const { return context_.work_dir / manifest_.id; }

  /// Writes (and builds, when needed) the keep-alive agent, then returns a
  /// ready-to-launch session configuration.
  SessionConfig session_config() const;

  std::filesystem::path write_source(std::string_view text, int version) const;
  /// Identity for interpreted backends. Throws CompileError with the
  /// compiler's output on failure.
  std::filesystem::path compile(const std::filesystem::path &source, int version) const;
  void load_code(Session &session, const std::filesystem::path &artifact) const;
  /// Starts the probe and returns once stopped inside the probed function.
  void invoke(Session &session, const ProbeRequest &probe) const;
  std::optional<std::string> detect_return(Session &session, const StackFrame &frame,
                                           const std::vector<Variable> &variables,
                                           const std::string &function) const;
  /// Brings the agent back to its idle breakpoint after a completed probe.
  void reset(Session &session) const;
  void restart(Session &session) const;

  std::string invocation_text(const ProbeRequest &probe) const;
  /// Replaces ${name} placeholders; unknown names throw BackendError.
  std::string expand(std::string_view text, const std::map<std::string, std::string> &extra = {}) const;

private:
  std::map<std::string, std::string> variables() const;
  Json expand_json(const Json &j, const std::map<std::string, std::string> &vars) const;

  BackendManifest manifest_;
  BackendContext context_;
};

class BackendRegistry {
public:
  /// The manifests shipped inside the library.
  static BackendRegistry builtin(const BackendContext &context);

  /// Adds every `*.json` manifest in `dir`; a manifest replaces a backend
  /// with the same id.
  void add_directory(const std::filesystem::path &dir);
  void add(BackendManifest manifest);

  const Backend *find(std::string_view id) const;
  std::vector<std::string> ids() const;
  const BackendContext &context() const noexcept { return context_; }

private:
  BackendContext context_;
  std::map<std::string, std::unique_ptr<Backend>> backends_;
};

/// Content of a file embedded from assets/ at build time; throws
/// BackendError when there is none by that name.
const std::string &embedded_asset(std::string_view name);
std::vector<std::string> embedded_asset_names();

/// Substitutes ${name} from `vars`; throws BackendError on unknown names.
std::string expand_placeholders(std::string_view text,
                                const std::map<std::string, std::string> &vars);

} // namespace liverec
