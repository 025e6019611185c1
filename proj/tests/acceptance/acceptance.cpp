// One PASS/FAIL/SKIP line per primary criterion; exits non-zero on any FAIL.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "bench.hpp"
#include "process.hpp"
#include "random_messages.hpp"
#include "service.hpp"
#include "support.hpp"

using namespace liverec;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  enum Kind { Pass, Fail, Skip } kind = Fail;
  std::string detail;
};

Verdict pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Verdict fail(std::string d) { return {Verdict::Fail, std::move(d)}; }
Verdict skip(std::string d) { return {Verdict::Skip, std::move(d)}; }

template <typename T> std::string join(const std::vector<T> &xs) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << (i ? "," : "") << xs[i];
  out << ']';
  return out.str();
}

// Wire round-trip: 1000 random messages, random chunking, < 5 s.
Verdict wire_roundtrip() {
  std::mt19937 rng(2024);
  std::vector<wire::Message> sent;
  std::string stream;
  for (int i = 0; i < 1000; ++i) {
    sent.push_back(test::random_message(rng));
    stream += wire::encode(sent.back());
  }
  wire::FrameDecoder decoder;
  std::vector<wire::Message> got;
  for (const auto &chunk : test::random_chunks(rng, stream))
    for (auto &m : decoder.feed(chunk))
      got.push_back(std::move(m));
  if (got.size() != sent.size())
    return fail("decoded " + std::to_string(got.size()) + " of 1000");
  for (std::size_t i = 0; i < sent.size(); ++i)
    if (!(got[i] == sent[i]))
      return fail("message " + std::to_string(i) + " differs");
  return pass("1000/1000 equal");
}

// foo(3): completed, return 3, i = [0,1,2,3], 5 byte-identical runs, < 10 s.
Verdict foo_oracle() {
  std::string first;
  for (int run = 0; run < 5; ++run) {
    test::MockRig rig;
    auto rec = rig.record_fixture("foo.mock");
    if (rec.status != RecordingStatus::Completed)
      return fail(std::string("status ") + to_string(rec.status));
    if (rec.return_value != "3")
      return fail("return " + rec.return_value.value_or("none"));
    auto i = test::values_of(histories(rec), "i");
    if (i != std::vector<std::string>{"0", "1", "2", "3"})
      return fail("i = " + join(i));
    std::string bytes = to_json(rec).dump();
    if (run == 0)
      first = bytes;
    else if (bytes != first)
      return fail("run " + std::to_string(run) + " differs from run 0");
  }
  return pass("return 3, i=[0,1,2,3], 5 identical runs");
}

// Binary search for 'g': low [0,3,5,6], mid [2,4,5], value ['c','e','f'], -1, < 10 s.
Verdict search_g() {
  test::MockRig rig;
  auto rec = rig.record_fixture("search_g.mock");
  auto hs = histories(rec);
  auto low = test::values_of(hs, "low");
  auto mid = test::values_of(hs, "mid");
  auto value = test::values_of(hs, "value");
  std::string got = "low=" + join(low) + " mid=" + join(mid) + " value=" + join(value) +
                    " return=" + rec.return_value.value_or("none");
  bool ok = rec.status == RecordingStatus::Completed && low == std::vector<std::string>{"0", "3", "5", "6"} &&
            mid == std::vector<std::string>{"2", "4", "5"} &&
            value == std::vector<std::string>{"'c'", "'e'", "'f'"} && rec.return_value == "-1";
  return ok ? pass(got) : fail(got);
}

// Non-terminating probe cut at exactly 80, the next probe completes, < 20 s.
Verdict truncation() {
  test::MockRig rig;
  auto spin = rig.record_fixture("spin.mock", 80);
  if (spin.status != RecordingStatus::Interrupted || spin.snapshots.size() != 80)
    return fail(std::string("spin: ") + to_string(spin.status) + " with " +
                std::to_string(spin.snapshots.size()) + " snapshots");
  auto next = rig.record_fixture("foo.mock", 80);
  if (next.status != RecordingStatus::Completed || next.return_value != "3")
    return fail(std::string("next probe: ") + to_string(next.status));
  return pass("80 snapshots interrupted, next probe completed");
}

// 19-step scenario on mock: 19 CSV rows, step 16 interrupted at 80, returns match, < 60 s.
Verdict scenario_replay() {
  auto scenario = bench::load_scenario(test::source_dir() / "scenarios" / "binary_search.json");
  test::TempDir dir;
  ProbeService service(BackendRegistry::builtin(test::context_in(dir.path())));
  auto rows = bench::replay(service, scenario, "mock");
  std::string csv = bench::to_csv(rows);
  auto lines = std::count(csv.begin(), csv.end(), '\n') - 1;
  if (lines != 19)
    return fail(std::to_string(lines) + " CSV rows");
  if (rows[16].status != "interrupted" || rows[16].snapshot_count != 80)
    return fail("step 16: " + rows[16].status + " at " + std::to_string(rows[16].snapshot_count));
  int checked = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &step = scenario.steps[i];
    if (step.expected_status && rows[i].status != *step.expected_status)
      return fail("step " + std::to_string(i) + ": status " + rows[i].status);
    if (step.expected_return) {
      if (rows[i].return_value != step.expected_return)
        return fail("step " + std::to_string(i) + ": return " + rows[i].return_value.value_or("none") +
                    ", expected " + *step.expected_return);
      ++checked;
    }
  }
  return pass("19 rows, step 16 interrupted at 80, " + std::to_string(checked) + " returns match");
}

// total_ms monotone over k in {10,50,100,200} and t(200)/t(100) < 3.
Verdict step_scaling() {
  test::TempDir dir;
  ServiceOptions opts;
  opts.max_steps = 201;
  ProbeService service(BackendRegistry::builtin(test::context_in(dir.path())), opts);
  // Warm the lane so the first row does not pay for the launch.
  service.submit("mock", bench::straight_program("mock", 10));
  auto rows = bench::step_scaling(service, "mock", {10, 50, 100, 200}, 5);
  std::vector<long long> ms;
  for (const auto &r : rows)
    ms.push_back(r.total_ms);
  bool monotone = std::is_sorted(ms.begin(), ms.end());
  double ratio = ms[2] > 0 ? static_cast<double>(ms[3]) / static_cast<double>(ms[2]) : 0;
  char buf[64];
  std::snprintf(buf, sizeof buf, " ratio(200/100)=%.2f", ratio);
  std::string got = "total_ms=" + join(ms) + buf;
  return monotone && ms[2] > 0 && ratio < 3 ? pass(got) : fail(got);
}

// 200 stackTrace roundtrips with --latency 1: median within [1, 5] ms, < 30 s.
Verdict latency() {
  test::TempDir dir;
  auto ctx = test::context_in(dir.path());
  ctx.extra_adapter_args = {"--latency", "1"};
  auto reg = BackendRegistry::builtin(ctx);
  auto rows = bench::roundtrip_latency(*reg.find("mock"), 200, 0);
  std::vector<double> ms;
  for (const auto &r : rows)
    ms.push_back(r.roundtrip_ms);
  double m = bench::median(ms);
  char buf[64];
  std::snprintf(buf, sizeof buf, "n=%zu median=%.3f ms", ms.size(), m);
  return ms.size() == 200 && m >= 1.0 && m <= 5.0 ? pass(buf) : fail(buf);
}

// debugpy, target 'g': return -1, left [0,3,5,6], < 60 s. Skipped without debugpy.
Verdict python_binary_search() {
  bool have = false;
  try {
    have = run_command({"python3", "-c", "import debugpy"}).exit_code == 0;
  } catch (const std::exception &) {
  }
  if (!have)
    return skip("debugpy not importable");
  auto scenario = bench::load_scenario(test::source_dir() / "scenarios" / "binary_search.json");
  test::TempDir dir;
  ProbeService service(BackendRegistry::builtin(test::context_in(dir.path())));
  auto r = service.submit("python", scenario.steps[18].sources.at("python"));
  if (!r.recording)
    return fail(std::string(to_string(r.outcome)) + ": " + r.error);
  auto left = test::values_of(histories(*r.recording), "left");
  std::string got = "return=" + r.recording->return_value.value_or("none") + " left=" + join(left);
  bool ok = r.recording->return_value == "-1" && left == std::vector<std::string>{"0", "3", "5", "6"};
  return ok ? pass(got) : fail(got);
}

} // namespace

int main() {
  struct Criterion {
    const char *id;
    double limit_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"wire-roundtrip", 5, wire_roundtrip},     {"foo-oracle", 10, foo_oracle},
      {"binary-search-g", 10, search_g},          {"truncation-restart", 20, truncation},
      {"scenario-replay", 60, scenario_replay},  {"step-scaling-shape", 0, step_scaling},
      {"latency-tool", 30, latency},             {"python-binary-search", 60, python_binary_search},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    auto start = Clock::now();
    Verdict o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = fail(std::string("threw: ") + e.what());
    }
    double s = std::chrono::duration<double>(Clock::now() - start).count();
    if (o.kind != Verdict::Skip && c.limit_s > 0 && s >= c.limit_s)
      o = fail(o.detail + "; took " + std::to_string(s) + " s, limit " + std::to_string(c.limit_s) + " s");
    const char *tag = o.kind == Verdict::Pass ? "PASS" : o.kind == Verdict::Skip ? "SKIP" : "FAIL";
    std::printf("%s %s (%.2f s): %s\n", tag, c.id, s, o.detail.c_str());
    std::fflush(stdout);
    failed += o.kind == Verdict::Fail;
  }
  return failed == 0 ? 0 : 1;
}
