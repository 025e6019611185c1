#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "session.hpp"

namespace liverec {

class Backend;
struct ProbeRequest;

struct StackFrameSnapshot {
  int line = 1;
  int column = 1;
  int height = 0;
  /// Adapter order, values as the adapter renders them.
  std::vector<Variable> variables;

  friend bool operator==(const StackFrameSnapshot &, const StackFrameSnapshot &) = default;
};

enum class RecordingStatus { Completed, Interrupted, Failed };

const char *to_string(RecordingStatus status) noexcept;

struct StackRecording {
  std::vector<StackFrameSnapshot> snapshots;
  std::optional<std::string> return_value;
  RecordingStatus status = RecordingStatus::Completed;
  /// Why a Failed recording failed ("terminated", "invoke: ...").
  std::string reason;

  friend bool operator==(const StackRecording &, const StackRecording &) = default;
};

struct HistoryEntry {
  std::string value;
  int line = 0;
  friend bool operator==(const HistoryEntry &, const HistoryEntry &) = default;
};

/// One variable's value history, in order of first appearance.
struct History {
  std::string name;
  std::vector<HistoryEntry> entries;
  friend bool operator==(const History &, const History &) = default;
};

inline constexpr int kDefaultMaxSteps = 80;

/// Max steps from LIVEREC_MAX_STEPS when set to a positive integer, else `fallback`.
int max_steps_from_env(int fallback = kDefaultMaxSteps);

/// Drives one invocation of `probe.function` and captures the top frame
/// after every step over. The probe's code must already be loaded and the
/// session idle in the keep-alive agent.
///
/// Hitting `max_steps` restarts the session (through the backend) and
/// returns the partial recording as Interrupted. A debuggee that dies also
/// leads to a restart and a Failed recording.
StackRecording record(Session &session, const Backend &backend, const ProbeRequest &probe,
                      int max_steps = kDefaultMaxSteps);

/// Per-variable value sequences with consecutive duplicates collapsed.
///
/// A value is tied to the line whose execution produced it: the previous
/// snapshot's line, or snapshot 0's own line for values bound on entry.
std::vector<History> histories(const StackRecording &rec);

struct SnapshotView {
  const StackFrameSnapshot &snapshot;
  int highlight_line;
};

/// Throws std::out_of_range when `t` is not a valid index.
SnapshotView snapshot_at(const StackRecording &rec, std::size_t t);

/// {status, return, snapshots, histories}; a failed recording adds "reason".
Json to_json(const StackRecording &rec);
StackRecording recording_from_json(const Json &j);

} // namespace liverec
