#include "bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace liverec::bench {

using Clock = std::chrono::steady_clock;

namespace {

long long elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

double elapsed_ms_precise(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Quotes a CSV field when needed.
std::string field(const std::string &text) {
  if (text.find_first_of(",\"\n") == std::string::npos)
    return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

} // namespace

const char *to_string(EditKind kind) noexcept {
  return kind == EditKind::EditCode ? "code" : "input";
}

Scenario parse_scenario(const Json &j) {
  Scenario s;
  if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array())
    throw std::invalid_argument("scenario needs a 'steps' list");
  s.name = j.value("name", std::string("scenario"));
  for (const auto &st : j["steps"]) {
    ScenarioStep step;
    step.index = st.at("index").get<int>();
    std::string kind = st.at("kind").get<std::string>();
    if (kind == "code")
      step.kind = EditKind::EditCode;
    else if (kind == "input")
      step.kind = EditKind::EditInput;
    else
      throw std::invalid_argument("step kind must be 'code' or 'input', got '" + kind + "'");
    step.note = st.value("note", std::string{});
    for (const auto &[lang, text] : st.at("sources").items())
      step.sources[lang] = text.get<std::string>();
    if (auto e = st.find("expect"); e != st.end()) {
      if (e->contains("return"))
        step.expected_return = (*e)["return"].is_null() ? std::string("None")
                                                        : (*e)["return"].get<std::string>();
      if (e->contains("status"))
        step.expected_status = (*e)["status"].get<std::string>();
      if (e->contains("snapshots"))
        step.expected_snapshots = (*e)["snapshots"].get<int>();
    }
    s.steps.push_back(std::move(step));
  }
  if (s.steps.empty())
    throw std::invalid_argument("scenario has no steps");
  if (s.steps.front().kind != EditKind::EditCode)
    throw std::invalid_argument("the first scenario step must define the code");
  for (std::size_t i = 1; i < s.steps.size(); ++i) {
    for (const auto &[lang, text] : s.steps[i].sources) {
      auto prev = s.steps[i - 1].sources.find(lang);
      if (prev != s.steps[i - 1].sources.end() && prev->second == text)
        throw std::invalid_argument("step " + std::to_string(s.steps[i].index) +
                                    " repeats the previous " + lang + " source");
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot read scenario " + path.string());
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded())
    throw std::invalid_argument(path.string() + " is not valid JSON");
  return parse_scenario(j);
}

std::vector<ReplayRow> replay(ProbeService &service, const Scenario &scenario,
                              const std::string &language) {
  for (const auto &step : scenario.steps)
    if (!step.sources.count(language))
      throw std::invalid_argument("step " + std::to_string(step.index) + " has no " + language +
                                  " source");
  std::vector<ReplayRow> rows;
  for (const auto &step : scenario.steps) {
    auto start = Clock::now();
    ProbeResult r = service.submit(language, step.sources.at(language));
    ReplayRow row;
    row.step = step.index;
    row.kind = step.kind;
    row.duration_ms = elapsed_ms(start);
    if (r.recording) {
      row.snapshot_count = r.recording->snapshots.size();
      row.status = to_string(r.recording->status);
      row.return_value = r.recording->return_value;
    } else {
      row.status = to_string(r.outcome);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string straight_program(const std::string &language, int k) {
  if (k < 0)
    throw std::invalid_argument("step count must be >= 0");
  std::ostringstream out;
  if (language == "mock" || language == "mock-direct") {
    Json steps = Json::array();
    for (int i = 0; i < k; ++i)
      steps.push_back(Json{{"line", i + 3}, {"column", 3}, {"set", {{"x", std::to_string(i)}}}});
    steps.push_back(Json{{"line", k + 3}, {"column", 3}, {"return", std::to_string(k)}});
    Json program = {{"functions", {{"straight", {{"params", Json::array()}, {"steps", steps}}}}}};
    out << "//@straight()\n" << program.dump() << "\n";
  } else if (language == "python") {
    out << "#@straight()\ndef straight():\n";
    for (int i = 0; i < k; ++i)
      out << "    x = " << i << "\n";
    out << "    return " << k << "\n";
  } else if (language == "c") {
    out << "//@straight()\nint straight(void) {\n  volatile int x = 0;\n";
    for (int i = 0; i < k; ++i)
      out << "  x = " << i << ";\n";
    out << "  return " << k << ";\n}\n";
  } else {
    throw std::invalid_argument("no straight-line generator for '" + language + "'");
  }
  return out.str();
}

std::vector<StepRow> step_scaling(ProbeService &service, const std::string &language,
                                  const std::vector<int> &ks, int repeat) {
  repeat = std::max(repeat, 1);
  for (int k : ks)
    if (k + 1 > service.options().max_steps)
      throw std::invalid_argument(std::to_string(k) + " steps need max_steps >= " + std::to_string(k + 1) +
                                  ", the service has " + std::to_string(service.options().max_steps));
  std::vector<StepRow> rows;
  for (int k : ks) {
    std::string source = straight_program(language, k);
    StepRow row;
    row.steps = k;
    row.total_ms = -1;
    for (int r = 0; r < repeat; ++r) {
      auto start = Clock::now();
      ProbeResult result = service.submit(language, source);
      long long ms = elapsed_ms(start);
      if (!result.recording)
        throw std::runtime_error("straight-line probe with " + std::to_string(k) +
                                 " steps failed: " + result.error);
      row.snapshot_count = result.recording->snapshots.size();
      if (row.total_ms < 0 || ms < row.total_ms)
        row.total_ms = ms;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<CompileLoadRow> compile_load_scaling(const Backend &backend, const std::vector<int> &locs) {
  Session session(backend.session_config());
  session.launch();
  std::vector<CompileLoadRow> rows;
  int version = 1000;
  for (int loc : locs) {
    // Header, return and closing lines count towards the size.
    int body = std::max(loc - 3, 0);
    auto source = backend.write_source(straight_program(backend.id(), body), ++version);
    CompileLoadRow row;
    row.loc = loc;
    auto start = Clock::now();
    auto artifact = backend.compile(source, version);
    row.compile_ms = backend.has_compile() ? elapsed_ms(start) : 0;
    start = Clock::now();
    backend.load_code(session, artifact);
    row.load_ms = elapsed_ms(start);
    rows.push_back(row);
  }
  session.close();
  return rows;
}

std::vector<LatencyRow> roundtrip_latency(const Backend &backend, int n, int pause_ms) {
  Session session(backend.session_config());
  session.launch();
  std::vector<LatencyRow> rows;
  for (int i = 0; i < n; ++i) {
    if (pause_ms > 0 && i > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(pause_ms));
    auto start = Clock::now();
    session.stack_trace();
    rows.push_back(LatencyRow{i, elapsed_ms_precise(start)});
  }
  session.close();
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty())
    return 0;
  std::sort(values.begin(), values.end());
  std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2;
}

std::string to_csv(const std::vector<ReplayRow> &rows) {
  std::ostringstream out;
  out << "step,kind,duration_ms,snapshot_count,status,return\n";
  for (const auto &r : rows)
    out << r.step << ',' << to_string(r.kind) << ',' << r.duration_ms << ',' << r.snapshot_count << ','
        << r.status << ',' << field(r.return_value.value_or("")) << '\n';
  return out.str();
}

std::string to_csv(const std::vector<StepRow> &rows) {
  std::ostringstream out;
  out << "steps,total_ms,snapshot_count\n";
  for (const auto &r : rows)
    out << r.steps << ',' << r.total_ms << ',' << r.snapshot_count << '\n';
  return out.str();
}

std::string to_csv(const std::vector<CompileLoadRow> &rows) {
  std::ostringstream out;
  out << "loc,compile_ms,load_ms\n";
  for (const auto &r : rows)
    out << r.loc << ',' << r.compile_ms << ',' << r.load_ms << '\n';
  return out.str();
}

std::string to_csv(const std::vector<LatencyRow> &rows) {
  std::ostringstream out;
  out << "i,roundtrip_ms,roundtrip_us\n";
  for (const auto &r : rows)
    out << r.i << ',' << std::llround(r.roundtrip_ms) << ',' << std::llround(r.roundtrip_ms * 1000)
        << '\n';
  return out.str();
}

} // namespace liverec::bench
