#include <doctest.h>

#include "bench.hpp"
#include "support.hpp"

using namespace liverec;
using namespace liverec::bench;

namespace {

Json two_steps() {
  return Json::parse(R"({
    "name": "t",
    "steps": [
      {"index": 0, "kind": "code", "note": "a", "sources": {"mock": "A"}},
      {"index": 1, "kind": "input", "note": "b", "sources": {"mock": "B"},
       "expect": {"status": "completed", "return": "1", "snapshots": 4}}
    ]
  })");
}

std::filesystem::path shipped() { return test::source_dir() / "scenarios" / "binary_search.json"; }

} // namespace

TEST_CASE("scenario parsing") {
  auto s = parse_scenario(two_steps());
  REQUIRE(s.steps.size() == 2);
  CHECK(s.steps[1].kind == EditKind::EditInput);
  CHECK(s.steps[1].expected_return == "1");
  CHECK(s.steps[1].expected_snapshots == 4);
  CHECK_FALSE(s.steps[0].expected_status);
  CHECK(std::string(to_string(EditKind::EditCode)) == "code");
}

TEST_CASE("scenario rules") {
  Json first_input = two_steps();
  first_input["steps"][0]["kind"] = "input";
  CHECK_THROWS_AS(parse_scenario(first_input), std::invalid_argument);
  Json unchanged = two_steps();
  unchanged["steps"][1]["sources"]["mock"] = "A";
  CHECK_THROWS_AS(parse_scenario(unchanged), std::invalid_argument);
  Json bad_kind = two_steps();
  bad_kind["steps"][1]["kind"] = "refactor";
  CHECK_THROWS_AS(parse_scenario(bad_kind), std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario(Json::object()), std::invalid_argument);
  CHECK_THROWS_AS(load_scenario("/no/such/scenario.json"), std::invalid_argument);
}

TEST_CASE("the shipped scenario follows the rules for every language") {
  auto s = load_scenario(shipped());
  REQUIRE(s.steps.size() == 19);
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    CHECK(s.steps[i].index == static_cast<int>(i));
    CHECK(s.steps[i].sources.count("python"));
    CHECK(s.steps[i].sources.count("mock"));
    CHECK(s.steps[i].expected_status);
  }
  // [PAPER] the target is changed to 'g' and the loop becomes while True.
  CHECK(s.steps[16].expected_status == "interrupted");
  CHECK(s.steps[16].sources.at("python").find("while True:") != std::string::npos);
  CHECK(s.steps[17].sources.at("python").find("while left <= right:") != std::string::npos);
  CHECK(s.steps[18].expected_return == "-1");
}

TEST_CASE("replaying the scenario on the mock backend meets every expectation") {
  auto s = load_scenario(shipped());
  test::TempDir dir;
  ProbeService service(BackendRegistry::builtin(test::context_in(dir.path())));
  auto rows = replay(service, s, "mock");
  REQUIRE(rows.size() == s.steps.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CAPTURE(i);
    const auto &step = s.steps[i];
    CHECK(rows[i].step == step.index);
    CHECK(rows[i].kind == step.kind);
    CHECK(rows[i].status == *step.expected_status);
    if (step.expected_snapshots)
      CHECK(rows[i].snapshot_count == static_cast<std::size_t>(*step.expected_snapshots));
    if (step.expected_return)
      CHECK(rows[i].return_value == step.expected_return);
  }
  CHECK(rows[16].snapshot_count == 80);
  CHECK_THROWS_AS(replay(service, s, "c"), std::invalid_argument);
}

TEST_CASE("straight-line programs record k + 1 snapshots") {
  test::TempDir dir;
  ServiceOptions opts;
  opts.max_steps = 60;
  ProbeService service(BackendRegistry::builtin(test::context_in(dir.path())), opts);
  auto rows = step_scaling(service, "mock", {0, 1, 10, 50}, 1);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].snapshot_count == 1);
  CHECK(rows[1].snapshot_count == 2);
  CHECK(rows[2].snapshot_count == 11);
  CHECK(rows[3].snapshot_count == 51);
  CHECK_THROWS_AS(step_scaling(service, "mock", {60}, 1), std::invalid_argument);
  CHECK_THROWS_AS(straight_program("cobol", 3), std::invalid_argument);
  CHECK(straight_program("python", 2).find("#@") == 0);
  CHECK(straight_program("c", 2).find("//@") == 0);
}

TEST_CASE("compile and load timings") {
  test::TempDir dir;
  auto reg = BackendRegistry::builtin(test::context_in(dir.path()));
  auto rows = compile_load_scaling(*reg.find("mock"), {5, 50});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].loc == 5);
  CHECK(rows[0].compile_ms == 0);
  CHECK(rows[1].load_ms >= 0);
}

TEST_CASE("roundtrip latency rows") {
  test::TempDir dir;
  auto reg = BackendRegistry::builtin(test::context_in(dir.path()));
  auto rows = roundtrip_latency(*reg.find("mock"), 20, 0);
  REQUIRE(rows.size() == 20);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].i == static_cast<int>(i));
    CHECK(rows[i].roundtrip_ms > 0);
  }
}

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(median({7}) == 7);
  CHECK(median({}) == 0);
}

TEST_CASE("CSV output") {
  std::vector<ReplayRow> replay_rows{{0, EditKind::EditCode, 12, 3, "completed", "[1, 2]"},
                                     {1, EditKind::EditInput, 4, 80, "interrupted", std::nullopt}};
  CHECK(to_csv(replay_rows) ==
        "step,kind,duration_ms,snapshot_count,status,return\n"
        "0,code,12,3,completed,\"[1, 2]\"\n"
        "1,input,4,80,interrupted,\n");
  CHECK(to_csv(std::vector<StepRow>{{10, 5, 11}}) == "steps,total_ms,snapshot_count\n10,5,11\n");
  CHECK(to_csv(std::vector<CompileLoadRow>{{5, 0, 2}}) == "loc,compile_ms,load_ms\n5,0,2\n");
  CHECK(to_csv(std::vector<LatencyRow>{{0, 1.2345}}).rfind("i,roundtrip_ms,roundtrip_us\n0,", 0) == 0);
}
