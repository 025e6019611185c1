#include "service.hpp"

#include <algorithm>
#include <future>

namespace liverec {

const char *to_string(Outcome outcome) noexcept {
  switch (outcome) {
  case Outcome::Recording:
    return "recording";
  case Outcome::CompileError:
    return "compile_error";
  case Outcome::AnnotationError:
    return "annotation_error";
  case Outcome::EngineError:
    return "engine_error";
  }
  return "?";
}

Json to_json(const ProbeResult &result) {
  Json probe = nullptr;
  if (result.probe) {
    probe = Json{{"function", result.probe->function},
                 {"args", result.probe->args},
                 {"line", result.probe->span.line}};
  }
  return Json{{"outcome", to_string(result.outcome)},
              {"language", result.language},
              {"revision", result.revision},
              {"duration_ms", result.duration.count()},
              {"probe", probe},
              {"recording", result.recording ? to_json(*result.recording) : Json(nullptr)},
              {"error", result.outcome == Outcome::Recording ? Json(nullptr) : Json(result.error)}};
}

struct ProbeService::Job {
  std::string source;
  std::uint64_t revision = 0;
  std::promise<ProbeResult> done;
};

struct ProbeService::Lane {
  const Backend *backend = nullptr;
  std::optional<std::string> unavailable;

  std::mutex mutex;
  std::condition_variable cv;
  std::unique_ptr<Job> pending;
  bool stopping = false;
  std::optional<ProbeResult> latest;
  std::uint64_t executed = 0;
  std::thread thread;

  // Worker-owned.
  std::unique_ptr<Session> session;
  std::optional<std::size_t> loaded_hash;
  int version = 0;
};

ProbeService::ProbeService(BackendRegistry registry, ServiceOptions options)
    : registry_(std::move(registry)), options_(std::move(options)) {
  if (options_.max_steps < 1)
    options_.max_steps = kDefaultMaxSteps;
}

ProbeService::~ProbeService() {
  std::vector<Lane *> all;
  {
    std::lock_guard lock(lanes_mutex_);
    for (auto &[_, lane] : lanes_)
      all.push_back(lane.get());
  }
  for (Lane *l : all) {
    std::lock_guard lock(l->mutex);
    l->stopping = true;
    l->cv.notify_all();
  }
  for (Lane *l : all) {
    if (l->thread.joinable())
      l->thread.join();
  }
}

std::vector<std::string> ProbeService::languages() const {
  if (!options_.languages.empty())
    return options_.languages;
  return registry_.ids();
}

std::vector<BackendStatus> ProbeService::backend_status() const {
  std::lock_guard lock(status_mutex_);
  if (!status_cache_) {
    std::vector<BackendStatus> out;
    for (const auto &id : languages()) {
      BackendStatus s{id, {}, false, "not registered"};
      if (const Backend *b = registry_.find(id)) {
        s.description = b->manifest().description;
        auto why = b->unavailable_reason();
        s.available = !why;
        s.reason = why.value_or("");
      }
      out.push_back(std::move(s));
    }
    status_cache_ = std::move(out);
  }
  return *status_cache_;
}

ProbeService::Lane &ProbeService::lane(const std::string &language) {
  std::lock_guard lock(lanes_mutex_);
  if (auto it = lanes_.find(language); it != lanes_.end())
    return *it->second;

  auto allowed = languages();
  const Backend *backend = registry_.find(language);
  if (!backend || std::find(allowed.begin(), allowed.end(), language) == allowed.end())
    throw UnknownLanguage("unknown language '" + language + "'");
  auto lane = std::make_unique<Lane>();
  lane->backend = backend;
  lane->unavailable = backend->unavailable_reason();
  Lane &ref = *lane;
  lane->thread = std::thread([this, &ref] { worker(ref); });
  lanes_.emplace(language, std::move(lane));
  return ref;
}

ProbeResult ProbeService::submit(const std::string &language, std::string source) {
  Lane &l = lane(language);
  auto job = std::make_unique<Job>();
  job->source = std::move(source);
  {
    std::lock_guard lock(revision_mutex_);
    job->revision = next_revision_++;
  }
  auto result = job->done.get_future();
  {
    std::lock_guard lock(l.mutex);
    if (l.stopping)
      throw Error("service is shutting down");
    if (l.pending)
      l.pending->done.set_exception(std::make_exception_ptr(Superseded()));
    l.pending = std::move(job);
  }
  l.cv.notify_all();
  return result.get();
}

void ProbeService::worker(Lane &l) {
  while (true) {
    std::unique_ptr<Job> job;
    {
      std::unique_lock lock(l.mutex);
      l.cv.wait(lock, [&] { return l.stopping || l.pending; });
      if (l.stopping) {
        if (l.pending)
          l.pending->done.set_exception(std::make_exception_ptr(Error("service is shutting down")));
        l.pending.reset();
        break;
      }
      job = std::move(l.pending);
    }
    ProbeResult result = run(l, job->source);
    result.revision = job->revision;
    {
      std::lock_guard lock(l.mutex);
      l.latest = result;
      ++l.executed;
    }
    publish(result);
    job->done.set_value(std::move(result));
  }
  if (l.session)
    l.session->close();
}

ProbeResult ProbeService::run(Lane &l, const std::string &source) {
  const Backend &backend = *l.backend;
  ProbeResult r;
  r.language = backend.id();
  auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    r.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    return r;
  };

  std::optional<ProbeRequest> probe;
  try {
    probe = parse_annotation(source, backend.comment_marker());
  } catch (const AnnotationError &e) {
    r.outcome = Outcome::AnnotationError;
    r.error = e.what();
    return finish();
  }
  if (!probe) {
    r.outcome = Outcome::AnnotationError;
    r.error = "no probe";
    return finish();
  }
  probe->language = backend.id();
  r.probe = *probe;
  r.probe->source.clear(); // the caller has it

  if (l.unavailable) {
    r.outcome = Outcome::EngineError;
    r.error = "backend '" + backend.id() + "' is unavailable: " + *l.unavailable;
    return finish();
  }

  try {
    if (!l.session || l.session->status() != SessionStatus::Idle) {
      if (l.session)
        l.session->close();
      l.session.reset();
      l.loaded_hash.reset();
      auto session = std::make_unique<Session>(backend.session_config());
      session->launch();
      l.session = std::move(session);
    }
    std::size_t hash = std::hash<std::string>{}(without_annotation(source, probe->span));
    if (hash != l.loaded_hash) {
      auto path = backend.write_source(source, ++l.version);
      auto artifact = backend.compile(path, l.version);
      l.loaded_hash.reset();
      backend.load_code(*l.session, artifact);
      l.loaded_hash = hash;
    }
    StackRecording rec = record(*l.session, backend, *probe, options_.max_steps);
    // Interrupted and failed runs restarted the debuggee: the code is gone.
    if (rec.status != RecordingStatus::Completed)
      l.loaded_hash.reset();
    r.outcome = Outcome::Recording;
    r.recording = std::move(rec);
  } catch (const CompileError &e) {
    r.outcome = Outcome::CompileError;
    r.error = e.diagnostics();
  } catch (const LoadError &e) {
    r.outcome = Outcome::EngineError;
    r.error = e.what();
  } catch (const std::exception &e) {
    r.outcome = Outcome::EngineError;
    r.error = e.what();
    // State unknown: start from a fresh session next time.
    if (l.session)
      l.session->close();
    l.session.reset();
    l.loaded_hash.reset();
  }
  return finish();
}

void ProbeService::publish(const ProbeResult &result) {
  std::vector<Subscriber> targets;
  {
    std::lock_guard lock(subscribers_mutex_);
    for (const auto &[_, sub] : subscribers_)
      if (sub.first.empty() || sub.first == result.language)
        targets.push_back(sub.second);
  }
  for (const auto &fn : targets) {
    try {
      fn(result);
    } catch (...) {
      // A broken subscriber must not take the lane down.
    }
  }
}

std::optional<ProbeResult> ProbeService::latest(const std::string &language) const {
  std::lock_guard lock(lanes_mutex_);
  auto it = lanes_.find(language);
  if (it == lanes_.end())
    return std::nullopt;
  std::lock_guard lane_lock(it->second->mutex);
  return it->second->latest;
}

std::uint64_t ProbeService::executed(const std::string &language) const {
  std::lock_guard lock(lanes_mutex_);
  auto it = lanes_.find(language);
  if (it == lanes_.end())
    return 0;
  std::lock_guard lane_lock(it->second->mutex);
  return it->second->executed;
}

std::uint64_t ProbeService::subscribe(const std::string &language, Subscriber fn) {
  std::lock_guard lock(subscribers_mutex_);
  std::uint64_t id = next_subscriber_++;
  subscribers_.emplace(id, std::pair{language, std::move(fn)});
  return id;
}

void ProbeService::unsubscribe(std::uint64_t id) {
  std::lock_guard lock(subscribers_mutex_);
  subscribers_.erase(id);
}

} // namespace liverec
