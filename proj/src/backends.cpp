#include "backends.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "probespec.hpp"
#include "process.hpp"

namespace liverec {

// Generated from assets/ by cmake/embed_assets.cmake.
const std::map<std::string, std::string> &embedded_assets();

const char *to_string(Caller caller) noexcept {
  return caller == Caller::Debuggee ? "debuggee" : "debugger";
}

const std::string &embedded_asset(std::string_view name) {
  const auto &all = embedded_assets();
  auto it = all.find(std::string(name));
  if (it == all.end())
    throw BackendError("no embedded asset named '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> embedded_asset_names() {
  std::vector<std::string> names;
  for (const auto &[name, _] : embedded_assets())
    names.push_back(name);
  return names;
}

std::string expand_placeholders(std::string_view text,
                                const std::map<std::string, std::string> &vars) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("${", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    auto close = text.find('}', open + 2);
    if (close == std::string_view::npos)
      throw BackendError("unterminated placeholder in '" + std::string(text) + "'");
    out.append(text.substr(pos, open - pos));
    std::string name(text.substr(open + 2, close - open - 2));
    auto it = vars.find(name);
    if (it == vars.end())
      throw BackendError("unknown placeholder ${" + name + "} in '" + std::string(text) + "'");
    out += it->second;
    pos = close + 1;
  }
  return out;
}

namespace {

std::vector<std::string> string_list(const Json &j, const char *field) {
  std::vector<std::string> out;
  auto it = j.find(field);
  if (it == j.end() || it->is_null())
    return out;
  if (!it->is_array())
    throw BackendError(std::string("manifest field '") + field + "' must be a list of strings");
  for (const auto &v : *it) {
    if (!v.is_string())
      throw BackendError(std::string("manifest field '") + field + "' must be a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void write_file(const std::filesystem::path &path, std::string_view text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out)
    throw BackendError("cannot write " + path.string());
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::optional<std::int64_t> top_frame_id(Session &session) {
  auto frames = session.stack_trace();
  if (frames.empty())
    return std::nullopt;
  return frames.front().id;
}

std::string response_error(const wire::Message &resp) {
  std::string why = resp.message.value_or("");
  if (resp.body.is_object() && resp.body.contains("error")) {
    const auto &err = resp.body["error"];
    if (err.is_object() && err.contains("format"))
      why += (why.empty() ? "" : ": ") + err["format"].get<std::string>();
  }
  return why.empty() ? "evaluation failed" : why;
}

} // namespace

BackendManifest BackendManifest::from_json(const Json &j) {
  if (!j.is_object())
    throw BackendError("backend manifest must be an object");
  BackendManifest m;
  try {
    m.id = j.at("id").get<std::string>();
    if (m.id.empty())
      throw BackendError("backend id is empty");
    m.description = j.value("description", std::string{});
    m.comment_marker = j.at("comment_marker").get<std::string>();
    m.source_extension = j.value("source_extension", std::string(".txt"));

    m.adapter = string_list(j, "adapter");
    if (m.adapter.empty())
      throw BackendError("backend '" + m.id + "' needs an adapter command");
    std::string io = j.value("io", std::string("stdio"));
    if (io == "socket")
      m.io_mode = IoMode::Socket;
    else if (io != "stdio")
      throw BackendError("io must be 'stdio' or 'socket'");
    m.host = j.value("host", m.host);
    m.port = j.value("port", 0);
    m.initialize_args = j.value("initialize", Json::object());
    m.launch_args = j.value("launch", Json::object());
    Json env = j.value("env", Json::object());
    for (const auto &[k, v] : env.items())
      m.env[k] = v.get<std::string>();

    const auto &kaa = j.at("kaa");
    m.kaa_asset = kaa.at("asset").get<std::string>();
    m.kaa_line = kaa.at("idle_line").get<int>();
    m.kaa_build = string_list(kaa, "build");

    m.compile = string_list(j, "compile");
    m.artifact_extension = j.value("artifact_extension", m.source_extension);

    const auto &load = j.at("load");
    m.load_expression = load.at("evaluate").get<std::string>();
    m.load_resumes = load.value("resume", false);
    m.load_check = load.value("check", std::string{});
    m.load_check_ok = load.value("check_ok", m.load_check_ok);
    if (load.contains("expect"))
      m.load_expect = load["expect"].get<std::string>();

    std::string caller = j.at("caller").get<std::string>();
    if (caller == "debuggee")
      m.caller = Caller::Debuggee;
    else if (caller == "debugger")
      m.caller = Caller::Debugger;
    else
      throw BackendError("caller must be 'debuggee' or 'debugger'");
    m.invoke_template = j.at("invoke").get<std::string>();
    m.invoke_cycles = j.value("invoke_cycles", m.invoke_cycles);

    if (auto r = j.find("return"); r != j.end() && !r->is_null()) {
      if (r->contains("variable"))
        m.return_rule = {ReturnRule::Kind::Variable, r->at("variable").get<std::string>()};
      else if (r->contains("evaluate"))
        m.return_rule = {ReturnRule::Kind::Evaluate, r->at("evaluate").get<std::string>()};
      else
        throw BackendError("return rule needs 'variable' or 'evaluate'");
    }
    m.reset_cycles = j.value("reset_cycles", 0);
    m.requires_command = string_list(j, "requires");
  } catch (const Json::exception &e) {
    throw BackendError("backend manifest " + (m.id.empty() ? std::string() : "'" + m.id + "' ") +
                       "is malformed: " + e.what());
  }
  if (m.kaa_line < 1)
    throw BackendError("backend '" + m.id + "': kaa idle_line must be >= 1");
  if (m.reset_cycles < 0 || m.invoke_cycles < 1)
    throw BackendError("backend '" + m.id + "': cycle counts out of range");
  return m;
}

Backend::Backend(BackendManifest manifest, BackendContext context)
    : manifest_(std::move(manifest)), context_(std::move(context)) {}

std::map<std::string, std::string> Backend::variables() const {
  auto dir = std::filesystem::absolute(work_dir());
  auto kaa = dir / "kaa" / std::filesystem::path(manifest_.kaa_asset).filename();
  return {
      {"python", context_.python},
      {"mock_adapter", context_.mock_adapter.string()},
      {"workdir", dir.string()},
      {"runner", kaa.string()},
      {"runner_exe", (dir / "kaa" / "kaa").string()},
  };
}

std::string Backend::expand(std::string_view text,
                            const std::map<std::string, std::string> &extra) const {
  auto vars = variables();
  for (const auto &[k, v] : extra)
    vars[k] = v;
  return expand_placeholders(text, vars);
}

Json Backend::expand_json(const Json &j, const std::map<std::string, std::string> &vars) const {
  if (j.is_string())
    return expand_placeholders(j.get<std::string>(), vars);
  if (j.is_array() || j.is_object()) {
    Json out = j;
    for (auto it = out.begin(); it != out.end(); ++it)
      *it = expand_json(*it, vars);
    return out;
  }
  return j;
}

std::optional<std::string> Backend::unavailable_reason() const {
  if (manifest_.requires_command.empty())
    return std::nullopt;
  std::vector<std::string> argv;
  try {
    for (const auto &a : manifest_.requires_command)
      argv.push_back(expand(a));
  } catch (const BackendError &e) {
    return e.what();
  }
  if (!find_program(argv.front()))
    return "'" + argv.front() + "' not found";
  RunResult r;
  try {
    r = run_command(argv);
  } catch (const std::exception &e) {
    return e.what();
  }
  if (r.exit_code != 0) {
    std::string cmd;
    for (const auto &a : argv)
      cmd += (cmd.empty() ? "" : " ") + a;
    return "'" + cmd + "' exited with " + std::to_string(r.exit_code);
  }
  return std::nullopt;
}

SessionConfig Backend::session_config() const {
  auto vars = variables();
  std::filesystem::path runner = vars.at("runner");
  write_file(runner, embedded_asset(manifest_.kaa_asset));

  if (!manifest_.kaa_build.empty()) {
    std::vector<std::string> argv;
    for (const auto &a : manifest_.kaa_build)
      argv.push_back(expand_placeholders(a, vars));
    RunResult r = run_command(argv, work_dir());
    if (r.exit_code != 0)
      throw LaunchError("building the keep-alive agent failed:\n" + r.output);
  }

  SessionConfig config;
  for (const auto &a : manifest_.adapter)
    config.adapter_launch.push_back(expand_placeholders(a, vars));
  for (const auto &a : context_.extra_adapter_args)
    config.adapter_launch.push_back(a);
  config.initialize_args = expand_json(manifest_.initialize_args, vars);
  config.launch_args = expand_json(manifest_.launch_args, vars);
  config.runner_path = runner;
  config.runner_breakpoint = SourceLine{runner, manifest_.kaa_line};
  for (const auto &[k, v] : manifest_.env)
    config.env[k] = expand_placeholders(v, vars);
  config.io_mode = manifest_.io_mode;
  config.host = manifest_.host;
  config.port = manifest_.port;
  config.work_dir = std::filesystem::absolute(work_dir());
  return config;
}

std::filesystem::path Backend::write_source(std::string_view text, int version) const {
  auto path = std::filesystem::absolute(work_dir()) / "src" /
              ("probe" + std::to_string(version) + manifest_.source_extension);
  write_file(path, text);
  return path;
}

std::filesystem::path Backend::compile(const std::filesystem::path &source, int version) const {
  if (!has_compile())
    return source;
  // A fresh name per version: the loader would otherwise hand back the old image.
  auto artifact = std::filesystem::absolute(work_dir()) / "build" /
                  ("probe" + std::to_string(version) + manifest_.artifact_extension);
  std::filesystem::create_directories(artifact.parent_path());
  std::vector<std::string> argv;
  for (const auto &a : manifest_.compile)
    argv.push_back(expand(a, {{"source", source.string()}, {"artifact", artifact.string()}}));
  RunResult r;
  try {
    r = run_command(argv, work_dir());
  } catch (const std::system_error &e) {
    throw CompileError(std::string("cannot run compiler: ") + e.what());
  }
  if (r.exit_code != 0)
    throw CompileError(r.output);
  return artifact;
}

void Backend::load_code(Session &session, const std::filesystem::path &artifact) const {
  auto frame = top_frame_id(session);
  auto path = std::filesystem::absolute(artifact).string();
  auto resp = session.evaluate(expand(manifest_.load_expression, {{"artifact", path}}), frame);
  if (!resp.success)
    throw LoadError("loading " + path + " failed: " + response_error(resp));
  if (manifest_.load_expect) {
    std::string result = resp.body.is_object() ? resp.body.value("result", std::string{}) : "";
    if (result != *manifest_.load_expect)
      throw LoadError("loading " + path + " failed: got " + result);
  }
  if (manifest_.load_resumes) {
    session.continue_();
    session.wait_stopped();
  }
  if (!manifest_.load_check.empty()) {
    auto check = session.evaluate(expand(manifest_.load_check), top_frame_id(session), "watch");
    std::string result = check.body.is_object() ? check.body.value("result", std::string{}) : "";
    if (!check.success || result != manifest_.load_check_ok)
      throw LoadError("loading " + path + " failed: " + (check.success ? result : response_error(check)));
  }
}

std::string Backend::invocation_text(const ProbeRequest &probe) const {
  std::string args;
  for (std::size_t i = 0; i < probe.args.size(); ++i)
    args += (i ? "," : "") + probe.args[i];
  return expand(manifest_.invoke_template, {{"function", probe.function}, {"args", args}});
}

void Backend::invoke(Session &session, const ProbeRequest &probe) const {
  auto resp = session.evaluate(invocation_text(probe), top_frame_id(session));
  auto in_function = [&] {
    auto frames = session.stack_trace();
    return !frames.empty() && frames.front().name == probe.function;
  };

  if (manifest_.caller == Caller::Debuggee) {
    if (!resp.success)
      throw InvokeError(response_error(resp));
    for (int i = 0; i < manifest_.invoke_cycles; ++i) {
      session.continue_();
      session.wait_stopped();
      if (in_function())
        return;
    }
    throw InvokeTimeout("'" + probe.function + "' was not entered after " +
                        std::to_string(manifest_.invoke_cycles) + " continue cycles");
  }

  // Debugger-initiated call: a breakpoint inside the callee turns into a
  // stop, which some debuggers report as a failed evaluation.
  try {
    if (resp.success)
      session.wait_stopped();
    else
      session.wait_stopped(std::chrono::milliseconds(1000));
  } catch (const SessionTimeout &) {
    if (!resp.success)
      throw InvokeError(response_error(resp));
    throw InvokeTimeout("no stop after calling '" + probe.function + "'");
  }
  if (!in_function())
    throw InvokeTimeout("stopped outside '" + probe.function + "'");
}

std::optional<std::string> Backend::detect_return(Session &session, const StackFrame &frame,
                                                  const std::vector<Variable> &variables,
                                                  const std::string &function) const {
  const auto &rule = manifest_.return_rule;
  switch (rule.kind) {
  case ReturnRule::Kind::None:
    return std::nullopt;
  case ReturnRule::Kind::Variable: {
    std::string name = expand(rule.text, {{"function", function}});
    for (const auto &v : variables)
      if (v.name == name)
        return v.value;
    return std::nullopt;
  }
  case ReturnRule::Kind::Evaluate: {
    auto resp = session.evaluate(expand(rule.text, {{"function", function}}), frame.id, "watch");
    if (!resp.success || !resp.body.is_object())
      return std::nullopt;
    std::string result = resp.body.value("result", std::string{});
    if (result.empty() || result == "void")
      return std::nullopt;
    return result;
  }
  }
  return std::nullopt;
}

void Backend::reset(Session &session) const {
  for (int i = 0; i < manifest_.reset_cycles; ++i) {
    session.continue_();
    session.wait_stopped();
  }
}

void Backend::restart(Session &session) const { session.restart(); }

BackendRegistry BackendRegistry::builtin(const BackendContext &context) {
  BackendRegistry reg;
  reg.context_ = context;
  for (const auto &name : embedded_asset_names()) {
    if (name.rfind("backends/", 0) == 0 && name.size() > 5 &&
        name.compare(name.size() - 5, 5, ".json") == 0) {
      Json j = Json::parse(embedded_asset(name));
      reg.add(BackendManifest::from_json(j));
    }
  }
  return reg;
}

void BackendRegistry::add_directory(const std::filesystem::path &dir) {
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec)
    throw BackendError("cannot read backend directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  for (const auto &entry : it)
    if (entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto &f : files) {
    Json j = Json::parse(read_file(f), nullptr, false);
    if (j.is_discarded())
      throw BackendError(f.string() + " is not valid JSON");
    add(BackendManifest::from_json(j));
  }
}

void BackendRegistry::add(BackendManifest manifest) {
  std::string id = manifest.id;
  backends_[id] = std::make_unique<Backend>(std::move(manifest), context_);
}

const Backend *BackendRegistry::find(std::string_view id) const {
  auto it = backends_.find(std::string(id));
  return it == backends_.end() ? nullptr : it->second.get();
}

std::vector<std::string> BackendRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto &[id, _] : backends_)
    out.push_back(id);
  return out;
}

} // namespace liverec
