#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "backends.hpp"
#include "errors.hpp"
#include "probespec.hpp"
#include "recorder.hpp"

namespace liverec {

enum class Outcome { Recording, CompileError, AnnotationError, EngineError };

const char *to_string(Outcome outcome) noexcept;

struct ProbeResult {
  Outcome outcome = Outcome::EngineError;
  std::optional<StackRecording> recording;
  /// Compiler diagnostics or the error text; empty for recordings.
  std::string error;
  std::chrono::milliseconds duration{0};
  std::optional<ProbeRequest> probe;
  std::string language;
  /// Submission number within the service, increasing.
  std::uint64_t revision = 0;
};

Json to_json(const ProbeResult &result);

/// A newer submission for the same language replaced this one before it ran.
class Superseded : public Error {
public:
  Superseded() : Error("superseded by a newer submission") {}
};

class UnknownLanguage : public Error { using Error::Error; };

struct ServiceOptions {
  int max_steps = kDefaultMaxSteps;
  /// Backends accepted by submit(); empty means every registered one.
  std::vector<std::string> languages;
};

struct BackendStatus {
  std::string id;
  std::string description;
  bool available = false;
  std::string reason;
};

/// Runs parse, compile, load and record for editors.
///
/// Each language gets one lane: a lazily launched session and a worker that
/// runs submissions one at a time. While a probe runs, only the newest
/// waiting submission is kept; the ones it replaces fail with Superseded.
class ProbeService {
public:
  ProbeService(BackendRegistry registry, ServiceOptions options = {});
  ~ProbeService();
  ProbeService(const ProbeService &) = delete;
  ProbeService &operator=(const ProbeService &) = delete;

  /// Blocks until the submission ran. Throws UnknownLanguage or Superseded;
  /// pipeline failures come back as outcomes, never as exceptions.
  ProbeResult submit(const std::string &language, std::string source);

  std::optional<ProbeResult> latest(const std::string &language) const;

  using Subscriber = std::function<void(const ProbeResult &)>;
  /// `language` empty subscribes to every lane. Callbacks run on worker threads.
  std::uint64_t subscribe(const std::string &language, Subscriber fn);
  void unsubscribe(std::uint64_t id);

  std::vector<std::string> languages() const;
  std::vector<BackendStatus> backend_status() const;
  const BackendRegistry &registry() const noexcept { return registry_; }
  const ServiceOptions &options() const noexcept { return options_; }

  /// Probes executed (not superseded) for `language` so far.
  std::uint64_t executed(const std::string &language) const;

private:
  struct Job;
  struct Lane;

  Lane &lane(const std::string &language);
  void worker(Lane &lane);
  ProbeResult run(Lane &lane, const std::string &source);
  void publish(const ProbeResult &result);

  BackendRegistry registry_;
  ServiceOptions options_;

  mutable std::mutex lanes_mutex_;
  std::map<std::string, std::unique_ptr<Lane>> lanes_;
  mutable std::mutex status_mutex_;
  mutable std::optional<std::vector<BackendStatus>> status_cache_;

  mutable std::mutex subscribers_mutex_;
  std::map<std::uint64_t, std::pair<std::string, Subscriber>> subscribers_;
  std::uint64_t next_subscriber_ = 1;

  std::mutex revision_mutex_;
  std::uint64_t next_revision_ = 1;
};

} // namespace liverec
