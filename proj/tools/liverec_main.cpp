#include <algorithm>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "liverec/liverec.h"

namespace {

struct Common {
  std::string work_dir;
  std::string mock_adapter;
  std::string python;
  std::string backend_dir;
  int max_steps = 0;
};

struct EngineGuard {
  lr_engine *engine = nullptr;
  ~EngineGuard() { lr_engine_destroy(engine); }
};

struct Text {
  char *data = nullptr;
  ~Text() { lr_string_free(data); }
  std::string str() const { return data ? data : ""; }
};

int report(lr_status status) {
  std::cerr << "liverec: " << lr_status_str(status) << ": " << lr_last_error() << "\n";
  return 1;
}

lr_status make_engine(const Common &common, const std::vector<std::string> &languages, EngineGuard &guard) {
  lr_engine_options opts{};
  opts.work_dir = common.work_dir.empty() ? nullptr : common.work_dir.c_str();
  opts.mock_adapter = common.mock_adapter.empty() ? nullptr : common.mock_adapter.c_str();
  opts.python = common.python.empty() ? nullptr : common.python.c_str();
  opts.backend_dir = common.backend_dir.empty() ? nullptr : common.backend_dir.c_str();
  opts.max_steps = common.max_steps;
  std::string joined;
  for (const auto &l : languages)
    joined += (joined.empty() ? "" : ",") + l;
  opts.languages = languages.empty() ? nullptr : joined.c_str();
  return lr_engine_create(&opts, &guard.engine);
}

void add_common(CLI::App *cmd, Common &common) {
  cmd->add_option("--work-dir", common.work_dir, "Scratch directory (default liverec-work)");
  cmd->add_option("--mock-adapter", common.mock_adapter, "mock-adapter executable");
  cmd->add_option("--python", common.python, "Interpreter for the python backend");
  cmd->add_option("--backend-dir", common.backend_dir, "Extra directory of backend manifests");
  cmd->add_option("--max-steps", common.max_steps,
                  "Snapshot limit per recording (default $LIVEREC_MAX_STEPS or 80)");
}

int write_output(const std::string &text, const std::string &out) {
  if (out.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream file(out);
  if (!(file << text)) {
    std::cerr << "liverec: cannot write " << out << "\n";
    return 1;
  }
  return 0;
}

int exit_code_for(const std::string &outcome) {
  if (outcome == "recording")
    return 0;
  if (outcome == "compile_error")
    return 2;
  if (outcome == "annotation_error")
    return 3;
  return 4;
}

int run_serve(const Common &common, const std::vector<std::string> &backends, const std::string &host,
              unsigned short port) {
  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  EngineGuard engine;
  if (auto rc = make_engine(common, backends, engine); rc != LR_OK)
    return report(rc);
  lr_server *server = nullptr;
  if (auto rc = lr_server_start(engine.engine, host.c_str(), port, &server); rc != LR_OK)
    return report(rc);
  std::cerr << "liverec: listening on http://" << host << ":" << lr_server_port(server) << "\n";
  int sig = 0;
  sigwait(&stop_signals, &sig);
  lr_server_stop(server);
  lr_server_destroy(server);
  return 0;
}

int run_probe(const Common &common, const std::string &language, const std::string &file, bool full) {
  std::ifstream in(file);
  if (!in) {
    std::cerr << "liverec: cannot read " << file << "\n";
    return 1;
  }
  std::string source((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EngineGuard engine;
  if (auto rc = make_engine(common, {language}, engine); rc != LR_OK)
    return report(rc);
  Text result;
  if (auto rc = lr_engine_probe(engine.engine, language.c_str(), source.c_str(), &result.data); rc != LR_OK)
    return report(rc);
  auto j = nlohmann::ordered_json::parse(result.str());
  std::string outcome = j.value("outcome", "engine_error");
  if (full) {
    std::cout << j.dump(2) << "\n";
  } else if (outcome == "recording") {
    std::cout << j["recording"].dump(2) << "\n";
  } else {
    std::cerr << "liverec: " << outcome << ": " << j.value("error", "") << "\n";
  }
  return exit_code_for(outcome);
}

std::vector<int> parse_ints(const std::string &text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty())
      out.push_back(std::stoi(item));
  return out;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Probe recordings over debug adapters"};
  app.require_subcommand(1);
  Common common;

  auto *serve = app.add_subcommand("serve", "HTTP and WebSocket probe server");
  add_common(serve, common);
  std::vector<std::string> backends;
  std::string host = "127.0.0.1";
  unsigned short port = 8080;
  serve->add_option("--port", port, "Port to listen on (0 picks one)");
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--backend", backends, "Backend ids to serve (default: all)");

  auto *probe = app.add_subcommand("probe", "Record one annotated file and print the recording");
  add_common(probe, common);
  std::string language;
  std::string file;
  bool full = false;
  probe->add_option("--language", language, "Backend id")->required();
  probe->add_option("file", file, "Source file with a probe annotation")->required();
  probe->add_flag("--result", full, "Print the whole probe result instead of the recording");

  auto *bench = app.add_subcommand("bench", "Timing harness");
  bench->require_subcommand(1);
  std::string out;
  std::string scenario = "scenarios/binary_search.json";
  std::string steps = "10,50,100,200";
  std::string locs = "5,50,100";
  int repeat = 3;
  int n = 200;
  int pause_ms = 0;
  int latency = 0;
  std::string bench_language = "mock";

  auto bench_cmd = [&](const char *name, const char *help) {
    auto *cmd = bench->add_subcommand(name, help);
    add_common(cmd, common);
    cmd->add_option("--language", bench_language, "Backend id (default mock)");
    cmd->add_option("--out", out, "CSV output file (default stdout)");
    return cmd;
  };
  auto *replay = bench_cmd("replay", "Replay a scenario, one row per step");
  replay->add_option("--scenario", scenario, "Scenario JSON file");
  auto *step_cmd = bench_cmd("steps", "Recording time against executed steps");
  step_cmd->add_option("--steps", steps, "Comma-separated step counts; --max-steps defaults to the largest + 1");
  step_cmd->add_option("--repeat", repeat, "Runs per count; the fastest is reported");
  auto *compile = bench_cmd("compile", "Compile and load time against function size");
  compile->add_option("--locs", locs, "Comma-separated line counts");
  auto *lat = bench_cmd("latency", "stackTrace roundtrip times at a stop");
  lat->add_option("--n", n, "Number of requests");
  lat->add_option("--pause-ms", pause_ms, "Pause between requests");
  lat->add_option("--latency", latency, "Per-response delay injected by the mock adapter, in ms");

  CLI11_PARSE(app, argc, argv);

  if (serve->parsed())
    return run_serve(common, backends, host, port);
  if (probe->parsed())
    return run_probe(common, language, file, full);

  std::vector<int> ks, sizes;
  try {
    ks = parse_ints(steps);
    sizes = parse_ints(locs);
  } catch (const std::exception &e) {
    std::cerr << "liverec: bad number list: " << e.what() << "\n";
    return 1;
  }
  // A straight-line program of k steps records k + 1 snapshots.
  if (step_cmd->parsed() && common.max_steps == 0 && !ks.empty())
    common.max_steps = *std::max_element(ks.begin(), ks.end()) + 1;

  EngineGuard engine;
  if (auto rc = make_engine(common, {bench_language}, engine); rc != LR_OK)
    return report(rc);
  Text csv;
  lr_status rc = LR_OK;
  if (replay->parsed())
    rc = lr_bench_replay(engine.engine, scenario.c_str(), bench_language.c_str(), &csv.data);
  else if (step_cmd->parsed())
    rc = lr_bench_steps(engine.engine, bench_language.c_str(), ks.data(), ks.size(), repeat, &csv.data);
  else if (compile->parsed())
    rc = lr_bench_compile(engine.engine, bench_language.c_str(), sizes.data(), sizes.size(), &csv.data);
  else
    rc = lr_bench_latency(engine.engine, bench_language.c_str(), n, pause_ms, latency, &csv.data);
  if (rc != LR_OK)
    return report(rc);
  return write_output(csv.str(), out);
}
