#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <unistd.h>

#include "backends.hpp"
#include "probespec.hpp"
#include "recorder.hpp"
#include "session.hpp"

namespace liverec::test {

inline std::filesystem::path source_dir() { return LIVEREC_SOURCE_DIR; }
inline std::filesystem::path mock_adapter_path() { return LIVEREC_MOCK_ADAPTER_PATH; }

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fixture(const std::string &name) {
  return read_file(source_dir() / "tests" / "fixtures" / name);
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("liverec-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const std::filesystem::path &path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline BackendContext context_in(const std::filesystem::path &dir) {
  BackendContext ctx;
  ctx.work_dir = dir;
  ctx.mock_adapter = mock_adapter_path();
  return ctx;
}

/// A launched mock session with helpers to load and record fixtures.
struct MockRig {
  explicit MockRig(const std::string &backend_id = "mock", std::vector<std::string> extra_args = {}) {
    auto ctx = context_in(dir.path());
    ctx.extra_adapter_args = std::move(extra_args);
    registry = BackendRegistry::builtin(ctx);
    backend = registry.find(backend_id);
    session = std::make_unique<Session>(backend->session_config());
    session->launch();
  }

  ProbeRequest load(const std::string &source) {
    auto probe = parse_annotation(source, backend->comment_marker());
    if (!probe)
      throw std::runtime_error("fixture has no annotation");
    auto path = backend->write_source(source, ++version);
    backend->load_code(*session, backend->compile(path, version));
    return *probe;
  }

  StackRecording record_fixture(const std::string &name, int max_steps = kDefaultMaxSteps) {
    auto probe = load(fixture(name));
    return record(*session, *backend, probe, max_steps);
  }

  TempDir dir;
  BackendRegistry registry;
  const Backend *backend = nullptr;
  std::unique_ptr<Session> session;
  int version = 0;
};

inline std::vector<std::string> values_of(const std::vector<History> &hs, const std::string &name) {
  for (const auto &h : hs)
    if (h.name == name) {
      std::vector<std::string> out;
      for (const auto &e : h.entries)
        out.push_back(e.value);
      return out;
    }
  return {};
}

inline std::vector<int> lines_of(const std::vector<History> &hs, const std::string &name) {
  for (const auto &h : hs)
    if (h.name == name) {
      std::vector<int> out;
      for (const auto &e : h.entries)
        out.push_back(e.line);
      return out;
    }
  return {};
}

} // namespace liverec::test
