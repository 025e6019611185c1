#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "service.hpp"

namespace liverec::bench {

enum class EditKind { EditCode, EditInput };

const char *to_string(EditKind kind) noexcept;

struct ScenarioStep {
  int index = 0;
  EditKind kind = EditKind::EditCode;
  std::string note;
  /// Full file text per backend id.
  std::map<std::string, std::string> sources;
  std::optional<std::string> expected_return;
  std::optional<std::string> expected_status;
  std::optional<int> expected_snapshots;
};

struct Scenario {
  std::string name;
  std::vector<ScenarioStep> steps;
};

/// Throws std::invalid_argument when the file breaks the scenario rules
/// (first step edits code, consecutive sources differ).
Scenario load_scenario(const std::filesystem::path &path);
Scenario parse_scenario(const Json &j);

struct ReplayRow {
  int step = 0;
  EditKind kind = EditKind::EditCode;
  long long duration_ms = 0;
  std::size_t snapshot_count = 0;
  /// Recording status, or the outcome when no recording was made.
  std::string status;
  std::optional<std::string> return_value;
};

/// Submits every step's `language` source in order. Throws
/// std::invalid_argument when a step has no source for `language`.
std::vector<ReplayRow> replay(ProbeService &service, const Scenario &scenario,
                              const std::string &language);

struct StepRow {
  int steps = 0;
  long long total_ms = 0;
  std::size_t snapshot_count = 0;
};

/// A function of `k` straight-line statements in the backend's language.
/// Throws std::invalid_argument for languages without a generator.
std::string straight_program(const std::string &language, int k);

/// Records straight_program(k) for each k; best of `repeat` runs. Throws
/// std::invalid_argument when a k would be cut off by the service's max_steps.
std::vector<StepRow> step_scaling(ProbeService &service, const std::string &language,
                                  const std::vector<int> &ks, int repeat = 3);

struct CompileLoadRow {
  int loc = 0;
  long long compile_ms = 0;
  long long load_ms = 0;
};

/// Times compile and load separately for synthetic functions of `locs`
/// lines, on a private session.
std::vector<CompileLoadRow> compile_load_scaling(const Backend &backend, const std::vector<int> &locs);

struct LatencyRow {
  int i = 0;
  double roundtrip_ms = 0;
};

/// `n` stackTrace roundtrips at the agent's idle stop, `pause_ms` apart.
std::vector<LatencyRow> roundtrip_latency(const Backend &backend, int n, int pause_ms);

double median(std::vector<double> values);

std::string to_csv(const std::vector<ReplayRow> &rows);
std::string to_csv(const std::vector<StepRow> &rows);
std::string to_csv(const std::vector<CompileLoadRow> &rows);
std::string to_csv(const std::vector<LatencyRow> &rows);

} // namespace liverec::bench
