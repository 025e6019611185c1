#include "recorder.hpp"

#include <cstdlib>
#include <stdexcept>

#include "backends.hpp"
#include "errors.hpp"
#include "probespec.hpp"

namespace liverec {

const char *to_string(RecordingStatus status) noexcept {
  switch (status) {
  case RecordingStatus::Completed:
    return "completed";
  case RecordingStatus::Interrupted:
    return "interrupted";
  case RecordingStatus::Failed:
    return "failed";
  }
  return "?";
}

int max_steps_from_env(int fallback) {
  const char *raw = std::getenv("LIVEREC_MAX_STEPS");
  if (!raw || !*raw)
    return fallback;
  char *end = nullptr;
  long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v <= 0 || v > 1'000'000)
    return fallback;
  return static_cast<int>(v);
}

namespace {

StackFrameSnapshot capture(Session &session, const StackFrame &top, int height) {
  StackFrameSnapshot snap;
  snap.line = std::max(top.line, 1);
  snap.column = std::max(top.column, 1);
  snap.height = std::max(height, 0);
  auto scopes = session.scopes(top.id);
  if (!scopes.empty() && scopes.front().variables_reference > 0)
    snap.variables = session.variables(scopes.front().variables_reference);
  return snap;
}

void restart_quietly(Session &session, const Backend &backend) {
  try {
    backend.restart(session);
  } catch (const std::exception &) {
    // Left Dead; the owner relaunches on its next use.
  }
}

void clear_function_breakpoints(Session &session) {
  try {
    session.set_function_breakpoints({});
  } catch (const Error &) {
  }
}

} // namespace

StackRecording record(Session &session, const Backend &backend, const ProbeRequest &probe,
                      int max_steps) {
  if (max_steps < 1)
    throw std::invalid_argument("max_steps must be >= 1");
  StackRecording rec;
  const std::string &fn = probe.function;
  session.take_buffered();

  try {
    session.set_function_breakpoints({fn});
    try {
      backend.invoke(session, probe);
    } catch (const InvokeError &e) {
      clear_function_breakpoints(session);
      rec.status = RecordingStatus::Failed;
      rec.reason = std::string("invoke: ") + e.what();
      return rec;
    } catch (const InvokeTimeout &e) {
      clear_function_breakpoints(session);
      rec.status = RecordingStatus::Failed;
      rec.reason = std::string("invoke: ") + e.what();
      return rec;
    }

    std::optional<std::size_t> initial_depth;
    std::vector<StackFrame> frames;
    while (true) {
      frames = session.stack_trace();
      if (frames.empty() || frames.front().name != fn)
        break;
      if (!initial_depth)
        initial_depth = frames.size();
      if (rec.snapshots.size() == static_cast<std::size_t>(max_steps)) {
        rec.status = RecordingStatus::Interrupted;
        restart_quietly(session, backend);
        return rec;
      }
      int height = static_cast<int>(frames.size()) - static_cast<int>(*initial_depth);
      rec.snapshots.push_back(capture(session, frames.front(), height));
      session.step_over();
      session.wait_stopped();
    }

    if (!frames.empty()) {
      std::vector<Variable> caller_vars;
      auto scopes = session.scopes(frames.front().id);
      if (!scopes.empty() && scopes.front().variables_reference > 0)
        caller_vars = session.variables(scopes.front().variables_reference);
      rec.return_value = backend.detect_return(session, frames.front(), caller_vars, fn);
    }
    session.set_function_breakpoints({});
    backend.reset(session);
    rec.status = RecordingStatus::Completed;
    return rec;
  } catch (const DebuggeeTerminated &) {
    rec.status = RecordingStatus::Failed;
    rec.reason = "terminated";
    restart_quietly(session, backend);
    return rec;
  }
}

std::vector<History> histories(const StackRecording &rec) {
  std::vector<History> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t t = 0; t < rec.snapshots.size(); ++t) {
    const auto &snap = rec.snapshots[t];
    int line = t == 0 ? snap.line : rec.snapshots[t - 1].line;
    for (const auto &var : snap.variables) {
      auto [it, fresh] = index.emplace(var.name, out.size());
      if (fresh)
        out.push_back(History{var.name, {}});
      auto &entries = out[it->second].entries;
      if (entries.empty() || entries.back().value != var.value)
        entries.push_back(HistoryEntry{var.value, line});
    }
  }
  return out;
}

SnapshotView snapshot_at(const StackRecording &rec, std::size_t t) {
  if (t >= rec.snapshots.size())
    throw std::out_of_range("snapshot " + std::to_string(t) + " of " +
                            std::to_string(rec.snapshots.size()));
  return SnapshotView{rec.snapshots[t], rec.snapshots[t].line};
}

Json to_json(const StackRecording &rec) {
  Json snaps = Json::array();
  for (const auto &s : rec.snapshots) {
    Json vars = Json::array();
    for (const auto &v : s.variables)
      vars.push_back(Json{{"name", v.name}, {"value", v.value}});
    snaps.push_back(Json{{"line", s.line}, {"column", s.column}, {"height", s.height}, {"variables", vars}});
  }
  Json hist = Json::array();
  for (const auto &h : histories(rec)) {
    Json entries = Json::array();
    for (const auto &e : h.entries)
      entries.push_back(Json{{"value", e.value}, {"line", e.line}});
    hist.push_back(Json{{"name", h.name}, {"entries", entries}});
  }
  Json out = {{"status", to_string(rec.status)},
              {"return", rec.return_value ? Json(*rec.return_value) : Json(nullptr)},
              {"snapshots", snaps},
              {"histories", hist}};
  if (rec.status == RecordingStatus::Failed)
    out["reason"] = rec.reason;
  return out;
}

StackRecording recording_from_json(const Json &j) {
  StackRecording rec;
  std::string status = j.at("status").get<std::string>();
  if (status == "completed")
    rec.status = RecordingStatus::Completed;
  else if (status == "interrupted")
    rec.status = RecordingStatus::Interrupted;
  else if (status == "failed")
    rec.status = RecordingStatus::Failed;
  else
    throw std::invalid_argument("unknown recording status '" + status + "'");
  if (j.contains("return") && !j["return"].is_null())
    rec.return_value = j["return"].get<std::string>();
  rec.reason = j.value("reason", std::string{});
  for (const auto &s : j.at("snapshots")) {
    StackFrameSnapshot snap;
    snap.line = s.at("line").get<int>();
    snap.column = s.at("column").get<int>();
    snap.height = s.at("height").get<int>();
    for (const auto &v : s.at("variables"))
      snap.variables.push_back(Variable{v.at("name").get<std::string>(), v.at("value").get<std::string>()});
    rec.snapshots.push_back(std::move(snap));
  }
  return rec;
}

} // namespace liverec
